import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from rest_framework.exceptions import ValidationError

from experience.serializers import ExperienceGraphSerializer
from skeleton.frames import seconds_to_us
from utils.exceptions import GraphError

logger = logging.getLogger(__name__)


class Trigger(str, Enum):
    ADMIN = 'admin'
    VOTE = 'vote'
    AUTO = 'auto'


@dataclass(frozen=True)
class Transition:
    source: str
    trigger: Trigger
    target: str = None
    options: tuple = ()
    after_us: int = 0

    @property
    def targets(self):
        if self.trigger is Trigger.VOTE:
            return tuple(target for _, target in self.options)
        return (self.target,)

    @property
    def labels(self):
        return tuple(label for label, _ in self.options)

    def successor(self, label):
        for option, target in self.options:
            if option == label:
                return target
        return None


@dataclass(frozen=True)
class ExperienceGraph:
    name: str
    states: tuple
    labels: dict
    initial: str
    transitions: tuple

    @classmethod
    def from_dict(cls, data):
        serializer = ExperienceGraphSerializer(data=data)
        try:
            serializer.is_valid(raise_exception=True)
        except ValidationError as exc:
            raise GraphError("invalid experience graph", errors=exc.detail) from exc
        attrs = serializer.validated_data
        transitions = tuple(
            Transition(
                source=t['from'],
                trigger=Trigger(t['trigger']),
                target=t.get('to'),
                options=tuple((o['label'], o['to']) for o in t.get('options', ())),
                after_us=seconds_to_us(t.get('after_s') or 0),
            )
            for t in attrs['transitions']
        )
        return cls(
            name=attrs['name'],
            states=tuple(s['id'] for s in attrs['states']),
            labels={s['id']: s.get('label') or s['id'] for s in attrs['states']},
            initial=next(s['id'] for s in attrs['states'] if s['initial']),
            transitions=transitions,
        )

    def outgoing(self, state):
        return tuple(t for t in self.transitions if t.source == state)

    def has_edge(self, source, target):
        return any(target in t.targets for t in self.outgoing(source))

    def ballot_for(self, state):
        return next((t for t in self.outgoing(state) if t.trigger is Trigger.VOTE), None)

    def auto_for(self, state):
        return next((t for t in self.outgoing(state) if t.trigger is Trigger.AUTO), None)


def load_graph(path):
    path = Path(path)
    try:
        with path.open('rb') as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise GraphError(f"{path}: {exc}") from exc
    graph = ExperienceGraph.from_dict(data)
    logger.info("loaded experience %r: %d states, %d transitions", graph.name, len(graph.states), len(graph.transitions))
    return graph


DEFAULT_GRAPH = {
    'name': 'linear',
    'states': [{'id': 'lobby', 'initial': True}, {'id': 'show'}, {'id': 'end'}],
    'transitions': [
        {'from': 'lobby', 'to': 'show', 'trigger': 'admin'},
        {'from': 'show', 'to': 'end', 'trigger': 'admin'},
    ],
}
