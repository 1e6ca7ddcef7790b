"""mechsketch: a sketch-based planar mechanism workbench.

Draw links as ink strokes, mark joints with small gestures, and the scene
becomes a constraint-based kinematic model that can be driven, scrubbed
and traced.  The package splits into sketching (stroke capture and the
document), recognition (gesture classification and link grouping), the
mechanism scene graph, and the kinematics solver.
"""

from .errors import (AmbiguousJoint, DegenerateLink, FormatError, InvalidInput,
                     MechSketchError, NoGround, NotAGesture, NotSimulatable,
                     Overdriven, RejectedStroke, Underdriven, VersionError)
from .mechanism import JointKind, KinJoint, Mechanism, RigidLink, SceneModel
from .recognition import (GestureClass, JointHypothesis, LinkHypothesis,
                          classify_gesture, extract_joint, group_links)
from .sketch import SketchDocument, Stroke, StrokeMode

__version__ = "0.1.0"

__all__ = [
    "AmbiguousJoint",
    "DegenerateLink",
    "FormatError",
    "GestureClass",
    "InvalidInput",
    "JointHypothesis",
    "JointKind",
    "KinJoint",
    "LinkHypothesis",
    "MechSketchError",
    "Mechanism",
    "NoGround",
    "NotAGesture",
    "NotSimulatable",
    "Overdriven",
    "RejectedStroke",
    "RigidLink",
    "SceneModel",
    "SketchDocument",
    "Stroke",
    "StrokeMode",
    "Underdriven",
    "VersionError",
    "classify_gesture",
    "extract_joint",
    "group_links",
    "__version__",
]
