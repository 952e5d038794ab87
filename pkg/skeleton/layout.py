from dataclasses import dataclass

from utils.exceptions import InvalidArgument

HAND_JOINTS = (
    'wrist',
    'thumb_proximal', 'thumb_distal',
    'index_proximal', 'index_distal',
    'middle_proximal', 'middle_distal',
    'ring',
    'pinky',
)


@dataclass(frozen=True)
class SkeletonLayout:
    """Ordered joint names; a joint's index is its JointId."""

    names: tuple

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, 'names', names)
        if len(names) < 1:
            raise InvalidArgument("a skeleton layout needs at least one joint")
        if len(set(names)) != len(names):
            raise InvalidArgument("joint names must be unique")
        if len(names) > 255:
            raise InvalidArgument("joint ids are carried in one byte on the wire")

    @property
    def joint_count(self):
        return len(self.names)

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidArgument(f"unknown joint {name!r}") from None

    def indices(self, predicate):
        return tuple(i for i, name in enumerate(self.names) if predicate(name))

    def head_and_hands(self):
        """Joints a VR rig tracks directly: head plus everything on the hands."""
        return self.indices(lambda name: name == 'head' or name.startswith(('left_', 'right_')))

    def wrists(self):
        return self.indices(lambda name: name.endswith('_wrist'))


def build_default_layout():
    names = ['torso', 'neck', 'head']
    for side in ('left', 'right'):
        names.extend(f'{side}_{joint}' for joint in HAND_JOINTS)
    return SkeletonLayout(tuple(names))


# head, neck, torso plus wrist and eight finger joints per hand
DEFAULT_LAYOUT = build_default_layout()
