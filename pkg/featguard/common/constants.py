from typing import TypedDict

PACKAGE_NAME = "featguard"

# |γ| ≤ λ is tested with this slack on the boundary
NORM_TOLERANCE = 1e-12
# masked share of the score mass below this falls back to uniform over candidates
ZERO_MASS = 1e-12

DEFAULT_ENUMERATION_CAP = 10 ** 8
DEFAULT_RESTARTS = 10
DEFAULT_STEPS = 200

NONSENSE_ID = -1


class TypeColor(TypedDict):
    label: str
    path: str
    value: str
    verdict: str
    key: str


TYPE_TO_COLOR: TypeColor = {
    "label": "bold slate_blue3",
    "path": "bold green4",
    "value": "bold orange3",
    "verdict": "bold deep_pink1",
    "key": "bold violet",
}
