"""Server-side experience state.

The server owns the only writable copy. Every change bumps ``epoch`` and
is pushed to listeners as a :class:`SessionSnapshot`; clients keep the
snapshot with the highest epoch.
"""
import logging
from dataclasses import dataclass

from players.models import PlayerType
from utils.exceptions import BallotError, TransitionError
from utils.permissions import require_player_type

logger = logging.getLogger(__name__)

ADMIN_ONLY = frozenset({PlayerType.ADMINISTRATOR})
VOTERS = frozenset({PlayerType.STANDARD})


@dataclass(frozen=True)
class SessionSnapshot:
    state: str
    entered_at: int
    epoch: int
    ballot: tuple = ()

    @property
    def ballot_open(self):
        return bool(self.ballot)


class ExperienceStateMachine:
    def __init__(self, graph, roster, clock=None):
        self.graph = graph
        self.roster = roster
        self.clock = clock
        self.listeners = []
        self.state = graph.initial
        self.entered_at = self._now()
        self.epoch = 0
        self.ballot = None
        self.votes = {}
        self._auto_event = None
        self._entries = 0
        self._arm_auto()

    def _now(self):
        return self.clock.now if self.clock is not None else 0

    def snapshot(self):
        labels = self.ballot.labels if self.ballot else ()
        return SessionSnapshot(self.state, self.entered_at, self.epoch, labels)

    def _publish(self):
        self.epoch += 1
        snapshot = self.snapshot()
        for listener in list(self.listeners):
            listener(snapshot)
        return snapshot

    def _arm_auto(self):
        if self._auto_event is not None:
            self._auto_event.cancel()
            self._auto_event = None
        transition = self.graph.auto_for(self.state)
        if transition is not None and self.clock is not None:
            self._auto_event = self.clock.call_later(transition.after_us, self._fire_auto, self._entries)

    def _fire_auto(self, entry):
        # the state this timer was armed for has been left since
        if entry != self._entries:
            return
        transition = self.graph.auto_for(self.state)
        logger.info("auto transition %s -> %s", self.state, transition.target)
        self._enter(transition.target)

    def _enter(self, state):
        self._entries += 1
        self.state = state
        self.entered_at = self._now()
        self.ballot = None
        self.votes = {}
        snapshot = self._publish()
        self._arm_auto()
        return snapshot

    def _require(self, user, allowed, action):
        require_player_type(self.roster.player_type(user), allowed, action)

    def advance(self, user, target):
        """Move everyone to ``target`` along any transition declared from the current state."""
        self._require(user, ADMIN_ONLY, 'advance')
        if not self.graph.has_edge(self.state, target):
            raise TransitionError(f"no transition {self.state} -> {target}")
        logger.info("user %s advanced %s -> %s", user, self.state, target)
        return self._enter(target).state

    def open_ballot(self, user):
        self._require(user, ADMIN_ONLY, 'open a ballot')
        if self.ballot is not None:
            raise BallotError(f"a ballot is already open in {self.state}")
        transition = self.graph.ballot_for(self.state)
        if transition is None:
            raise BallotError(f"state {self.state} has no vote")
        self.ballot = transition
        self.votes = {}
        return self._publish()

    def cast_vote(self, user, option):
        self._require(user, VOTERS, 'vote')
        if self.ballot is None:
            raise BallotError("no ballot is open")
        if option not in self.ballot.labels:
            raise BallotError(f"{option!r} is not an option; choose from {', '.join(self.ballot.labels)}")
        self.votes[user] = option

    def withdraw_vote(self, user):
        self.votes.pop(user, None)

    def tally(self):
        if self.ballot is None:
            raise BallotError("no ballot is open")
        counts = {label: 0 for label in self.ballot.labels}
        for option in self.votes.values():
            counts[option] += 1
        return counts

    def close_ballot(self, user):
        """Enter the option with most votes; ties and empty ballots go to the first listed."""
        self._require(user, ADMIN_ONLY, 'close a ballot')
        counts = self.tally()
        winner = max(self.ballot.labels, key=lambda label: counts[label])
        target = self.ballot.successor(winner)
        logger.info("ballot in %s closed %s -> %s", self.state, counts, target)
        return self._enter(target).state

    def reset(self, user):
        self._require(user, ADMIN_ONLY, 'reset')
        logger.info("user %s reset the experience from %s", user, self.state)
        return self._enter(self.graph.initial).state

    def join_state(self, user):
        return self.snapshot()
