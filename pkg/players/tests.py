from django.db import IntegrityError
from django.test import TestCase

from players.models import PlayerSlot, PlayerType, default_roster, roster_for


class RosterTests(TestCase):
    def setUp(self):
        PlayerSlot.objects.create(roster='lab', user_id=3, player_type=PlayerType.SPECTATOR)
        PlayerSlot.objects.create(roster='lab', user_id=1, player_type=PlayerType.ADMINISTRATOR)
        PlayerSlot.objects.create(roster='lab', user_id=2)

    def test_first_slots_in_user_order(self):
        self.assertEqual(
            roster_for('lab', 2),
            [(1, PlayerType.ADMINISTRATOR), (2, PlayerType.STANDARD)],
        )

    def test_unknown_roster_is_empty(self):
        self.assertEqual(roster_for('missing', 4), [])

    def test_user_ids_unique_per_roster(self):
        with self.assertRaises(IntegrityError):
            PlayerSlot.objects.create(roster='lab', user_id=2)

    def test_default_roster_is_all_standard(self):
        roster = default_roster(3)
        self.assertEqual([user for user, _ in roster], [1, 2, 3])
        self.assertTrue(all(kind == PlayerType.STANDARD for _, kind in roster))
