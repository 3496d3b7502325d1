"""Desk object catalog"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from src.core.exceptions import RegistryError


@dataclass(frozen=True)
class DeskObject:
    name: str
    knockable: bool


# Cans and bottles stand upright and can be knocked over; the rest cannot.
CATALOG: Tuple[DeskObject, ...] = (
    DeskObject("7up_can", True),
    DeskObject("coke_can", True),
    DeskObject("green_can", True),
    DeskObject("orange_can", True),
    DeskObject("pepsi_can", True),
    DeskObject("redbull_can", True),
    DeskObject("water_bottle", True),
    DeskObject("blue_plastic_bottle", True),
    DeskObject("apple", False),
    DeskObject("orange", False),
    DeskObject("blue_chip_bag", False),
    DeskObject("brown_chip_bag", False),
    DeskObject("green_jalapeno_chip_bag", False),
    DeskObject("green_rice_chip_bag", False),
    DeskObject("rxbar_blueberry", False),
    DeskObject("rxbar_chocolate", False),
    DeskObject("sponge", False),
)

_BY_NAME: Dict[str, DeskObject] = {obj.name: obj for obj in CATALOG}
_INDEX: Dict[str, int] = {obj.name: i for i, obj in enumerate(CATALOG)}


def get_object(name: str) -> DeskObject:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise RegistryError(f"Unknown desk object: {name}") from None


def is_known(name: str) -> bool:
    return name in _BY_NAME


def object_names() -> List[str]:
    return [obj.name for obj in CATALOG]


def knockable_names() -> List[str]:
    return [obj.name for obj in CATALOG if obj.knockable]


def object_code(name: str) -> float:
    """Occupancy-channel intensity identifying an object type, in (0, 1]"""
    return (_INDEX[name] + 1) / len(CATALOG)
