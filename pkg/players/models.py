from django.db import models


class PlayerType(models.TextChoices):
    STANDARD = 'standard', 'Standard'
    SPECTATOR = 'spectator', 'Spectator'
    ADMINISTRATOR = 'administrator', 'Administrator'


class PlayerSlot(models.Model):
    """One seat of a server-side roster; a session takes the first N slots."""

    roster = models.CharField(max_length=64)
    user_id = models.PositiveSmallIntegerField()
    player_type = models.CharField(max_length=16, choices=PlayerType.choices,
                                   default=PlayerType.STANDARD)
    display_name = models.CharField(max_length=64, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.roster}#{self.user_id} ({self.player_type})"

    class Meta:
        unique_together = ('roster', 'user_id')
        ordering = ('roster', 'user_id')


def roster_for(name, count):
    """(user_id, PlayerType) pairs for the first ``count`` slots of a roster."""
    slots = list(PlayerSlot.objects.filter(roster=name).order_by('user_id')[:count])
    return [(slot.user_id, PlayerType(slot.player_type)) for slot in slots]


def default_roster(count):
    return [(user_id, PlayerType.STANDARD) for user_id in range(1, count + 1)]
