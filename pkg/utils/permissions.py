from rest_framework import permissions

from utils.exceptions import PlayerPermissionDenied


class IsStaffOrReadOnly(permissions.BasePermission):
    def has_permission(self, request, view):
        if request.method in permissions.SAFE_METHODS:
            return bool(request.user and request.user.is_authenticated)
        return bool(request.user and request.user.is_staff)


def require_player_type(player_type, allowed, action):
    """Raise unless ``player_type`` is one of ``allowed``."""
    if player_type not in allowed:
        raise PlayerPermissionDenied(
            f"{action} requires one of {sorted(str(a) for a in allowed)}, got {player_type}"
        )
