from pathlib import Path

from django.test import SimpleTestCase

from experience.graph import ExperienceGraph, Trigger, load_graph
from experience.machine import ExperienceStateMachine
from netsim.clock import VirtualClock
from players.models import PlayerType
from utils.exceptions import BallotError, GraphError, PlayerPermissionDenied, TransitionError

DEMO = Path(__file__).resolve().parent / 'graphs' / 'demo.toml'

ADMIN = 1
ROSTER = {
    ADMIN: PlayerType.ADMINISTRATOR,
    2: PlayerType.STANDARD,
    3: PlayerType.STANDARD,
    4: PlayerType.STANDARD,
    5: PlayerType.STANDARD,
    6: PlayerType.STANDARD,
    9: PlayerType.SPECTATOR,
}


class StaticRoster:
    """Fixed user -> PlayerType map; users not in it count as disconnected."""

    def __init__(self, types):
        self.types = dict(types)

    def player_type(self, user):
        return self.types.get(user)


def graph_data(**overrides):
    data = {
        'states': [{'id': 'a', 'initial': True}, {'id': 'b'}, {'id': 'c'}],
        'transitions': [
            {'from': 'a', 'to': 'b', 'trigger': 'admin'},
            {'from': 'b', 'trigger': 'vote', 'options': [{'label': 'x', 'to': 'a'}, {'label': 'y', 'to': 'c'}]},
        ],
    }
    data.update(overrides)
    return data


class ExperienceGraphTests(SimpleTestCase):
    def test_load_demo(self):
        graph = load_graph(DEMO)
        self.assertEqual(graph.initial, 'lobby')
        self.assertEqual(graph.ballot_for('intro').labels, ('forest', 'cave'))
        self.assertEqual(graph.auto_for('forest').after_us, 30_000_000)
        self.assertIs(graph.outgoing('lobby')[0].trigger, Trigger.ADMIN)
        self.assertEqual(graph.labels['intro'], 'Briefing')

    def test_needs_exactly_one_initial(self):
        states = [{'id': 'a', 'initial': True}, {'id': 'b', 'initial': True}, {'id': 'c'}]
        with self.assertRaises(GraphError) as ctx:
            ExperienceGraph.from_dict(graph_data(states=states))
        self.assertIn('states', ctx.exception.errors)

    def test_vote_needs_two_options(self):
        transitions = [
            {'from': 'a', 'to': 'b', 'trigger': 'admin'},
            {'from': 'b', 'trigger': 'vote', 'options': [{'label': 'x', 'to': 'c'}]},
        ]
        with self.assertRaises(GraphError):
            ExperienceGraph.from_dict(graph_data(transitions=transitions))

    def test_unreachable_state(self):
        transitions = [{'from': 'a', 'to': 'b', 'trigger': 'admin'}]
        with self.assertRaises(GraphError):
            ExperienceGraph.from_dict(graph_data(transitions=transitions))

    def test_unknown_target(self):
        transitions = graph_data()['transitions'] + [{'from': 'c', 'to': 'z', 'trigger': 'admin'}]
        with self.assertRaises(GraphError):
            ExperienceGraph.from_dict(graph_data(transitions=transitions))

    def test_auto_needs_delay(self):
        transitions = graph_data()['transitions'] + [{'from': 'c', 'to': 'a', 'trigger': 'auto'}]
        with self.assertRaises(GraphError):
            ExperienceGraph.from_dict(graph_data(transitions=transitions))


class ExperienceStateMachineTests(SimpleTestCase):
    def setUp(self):
        self.clock = VirtualClock()
        self.machine = ExperienceStateMachine(load_graph(DEMO), StaticRoster(ROSTER), self.clock)
        self.seen = []
        self.machine.listeners.append(self.seen.append)

    def open_intro_ballot(self):
        self.machine.advance(ADMIN, 'intro')
        self.machine.open_ballot(ADMIN)

    def test_admin_advances(self):
        self.assertEqual(self.machine.advance(ADMIN, 'intro'), 'intro')
        self.assertEqual(self.seen[-1].state, 'intro')

    def test_standard_player_cannot_advance(self):
        with self.assertRaises(PlayerPermissionDenied):
            self.machine.advance(2, 'intro')

    def test_edge_must_exist(self):
        with self.assertRaises(TransitionError):
            self.machine.advance(ADMIN, 'finale')

    def test_majority_wins(self):
        self.open_intro_ballot()
        for user, option in ((2, 'cave'), (3, 'cave'), (4, 'cave'), (5, 'forest'), (6, 'forest')):
            self.machine.cast_vote(user, option)
        self.assertEqual(self.machine.close_ballot(ADMIN), 'cave')

    def test_tie_goes_to_first_option(self):
        self.open_intro_ballot()
        for user, option in ((2, 'cave'), (3, 'cave'), (4, 'forest'), (5, 'forest')):
            self.machine.cast_vote(user, option)
        self.assertEqual(self.machine.close_ballot(ADMIN), 'forest')

    def test_revote_replaces(self):
        self.open_intro_ballot()
        self.machine.cast_vote(2, 'forest')
        self.machine.cast_vote(2, 'cave')
        self.assertEqual(self.machine.tally(), {'forest': 0, 'cave': 1})
        self.assertEqual(sum(self.machine.tally().values()), len(self.machine.votes))

    def test_withdrawn_vote_is_not_counted(self):
        self.open_intro_ballot()
        self.machine.cast_vote(2, 'cave')
        self.machine.withdraw_vote(2)
        self.assertEqual(self.machine.tally(), {'forest': 0, 'cave': 0})

    def test_vote_without_ballot(self):
        with self.assertRaises(BallotError):
            self.machine.cast_vote(2, 'forest')

    def test_spectators_and_admins_do_not_vote(self):
        self.open_intro_ballot()
        with self.assertRaises(PlayerPermissionDenied):
            self.machine.cast_vote(9, 'forest')
        with self.assertRaises(PlayerPermissionDenied):
            self.machine.cast_vote(ADMIN, 'forest')

    def test_unknown_option(self):
        self.open_intro_ballot()
        with self.assertRaises(BallotError):
            self.machine.cast_vote(2, 'desert')

    def test_join_mid_ballot(self):
        self.open_intro_ballot()
        snapshot = self.machine.join_state(4)
        self.assertEqual(snapshot.state, 'intro')
        self.assertEqual(snapshot.ballot, ('forest', 'cave'))

    def test_join_before_start(self):
        snapshot = self.machine.join_state(2)
        self.assertEqual(snapshot.state, 'lobby')
        self.assertFalse(snapshot.ballot_open)

    def test_reset(self):
        self.open_intro_ballot()
        self.assertEqual(self.machine.reset(ADMIN), 'lobby')
        self.assertIsNone(self.machine.ballot)
        first = self.machine.snapshot()
        self.machine.reset(ADMIN)
        second = self.machine.snapshot()
        self.assertEqual((first.state, first.ballot), (second.state, second.ballot))

    def test_reset_is_admin_only(self):
        with self.assertRaises(PlayerPermissionDenied):
            self.machine.reset(3)

    def test_auto_transition_fires_on_server_clock(self):
        self.open_intro_ballot()
        self.machine.cast_vote(2, 'forest')
        self.clock.run_until(1_000_000)
        self.machine.close_ballot(ADMIN)
        self.clock.run_until(30_999_999)
        self.assertEqual(self.machine.state, 'forest')
        self.clock.run_until(31_000_000)
        self.assertEqual(self.machine.state, 'finale')
        self.assertEqual(self.machine.entered_at, 31_000_000)

    def test_stale_auto_timer_is_ignored(self):
        self.open_intro_ballot()
        self.machine.close_ballot(ADMIN)
        self.assertEqual(self.machine.state, 'forest')
        self.machine.reset(ADMIN)
        self.clock.run_until(60_000_000)
        self.assertEqual(self.machine.state, 'lobby')

    def test_auto_timer_survives_ballot_opening(self):
        graph = ExperienceGraph.from_dict({
            'states': [{'id': 'lobby', 'initial': True}, {'id': 'a'}, {'id': 'b'}, {'id': 'end'}],
            'transitions': [
                {'from': 'lobby', 'trigger': 'vote',
                 'options': [{'label': 'a', 'to': 'a'}, {'label': 'b', 'to': 'b'}]},
                {'from': 'lobby', 'to': 'end', 'trigger': 'auto', 'after_s': 1},
            ],
        })
        clock = VirtualClock()
        machine = ExperienceStateMachine(graph, StaticRoster(ROSTER), clock)
        clock.run_until(100_000)
        machine.open_ballot(ADMIN)
        clock.run_until(5_000_000)
        self.assertEqual(machine.state, 'end')
        self.assertEqual(machine.entered_at, 1_000_000)

    def test_epoch_increases_with_every_broadcast(self):
        self.open_intro_ballot()
        self.machine.close_ballot(ADMIN)
        epochs = [snapshot.epoch for snapshot in self.seen]
        self.assertEqual(epochs, sorted(set(epochs)))
        self.assertEqual(len(epochs), 3)
