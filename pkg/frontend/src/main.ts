/**
 * Browser entry point: grab the DOM, pick the endpoint, start the app.
 *
 * The WebSocket endpoint is configurable with the `ws` query parameter,
 * e.g. `index.html?ws=ws://127.0.0.1:9001/`; the default matches the
 * server's default bind address.
 */

import { App } from "./app.js";
import { TabName } from "./viewmodel.js";

const DEFAULT_ENDPOINT = "ws://127.0.0.1:8472/";

function must<T extends Element>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as unknown as T;
}

function endpoint(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("ws") ?? DEFAULT_ENDPOINT;
}

window.addEventListener("DOMContentLoaded", () => {
  const tabs: Record<TabName, HTMLButtonElement> = {
    sketch: must("tab-sketch"),
    build: must("tab-build"),
    simulate: must("tab-simulate"),
  };
  const controls: Record<TabName, HTMLElement> = {
    sketch: must("sketch-controls"),
    build: must("build-controls"),
    simulate: must("simulate-controls"),
  };
  new App(
    {
      canvas: must("canvas"),
      tabs,
      controls,
      undo: must("btn-undo"),
      redo: must("btn-redo"),
      fit: must("btn-fit"),
      recognize: must("btn-recognize"),
      build: must("btn-build"),
      rate: must("rate-input"),
      setDriver: must("btn-set-driver"),
      run: must("btn-run"),
      pause: must("btn-pause"),
      direction: must("btn-direction"),
      clearTraces: must("btn-clear-traces"),
      hint: must("hint"),
      statusConn: must("status-conn"),
      statusSession: must("status-session"),
      statusRevision: must("status-revision"),
      statusSim: must("status-sim"),
      toasts: must("toasts"),
      banner: must("banner"),
    },
    endpoint(),
  );
});
