from collections import deque

from rest_framework import serializers

TRIGGERS = ('admin', 'vote', 'auto')


class StateSerializer(serializers.Serializer):
    id = serializers.RegexField(r'^[A-Za-z0-9_.-]{1,64}$')
    label = serializers.CharField(max_length=128, required=False, allow_blank=True)
    initial = serializers.BooleanField(default=False)


class VoteOptionSerializer(serializers.Serializer):
    label = serializers.CharField(max_length=64)
    to = serializers.CharField(max_length=64)


class TransitionSerializer(serializers.Serializer):
    # 'from' is a keyword, so the field is renamed on the way in
    source = serializers.CharField(max_length=64, source='from')
    trigger = serializers.ChoiceField(choices=TRIGGERS)
    to = serializers.CharField(max_length=64, required=False)
    options = VoteOptionSerializer(many=True, required=False)
    after_s = serializers.FloatField(required=False, min_value=0.0)

    def to_internal_value(self, data):
        if isinstance(data, dict) and 'from' in data and 'source' not in data:
            data = {**data, 'source': data['from']}
        return super().to_internal_value(data)

    def validate(self, attrs):
        trigger = attrs['trigger']
        if trigger == 'vote':
            options = attrs.get('options') or []
            if len(options) < 2:
                raise serializers.ValidationError({'options': "a vote lists at least two options"})
            labels = [option['label'] for option in options]
            if len(set(labels)) != len(labels):
                raise serializers.ValidationError({'options': "option labels must be unique"})
        elif 'to' not in attrs:
            raise serializers.ValidationError({'to': f"{trigger} transitions need a target"})
        if trigger == 'auto' and not attrs.get('after_s'):
            raise serializers.ValidationError({'after_s': "auto transitions need a positive delay"})
        return attrs


class ExperienceGraphSerializer(serializers.Serializer):
    name = serializers.CharField(max_length=128, required=False, default='experience')
    states = StateSerializer(many=True)
    transitions = TransitionSerializer(many=True, required=False, default=list)

    def validate(self, attrs):
        states = attrs['states']
        ids = [state['id'] for state in states]
        if len(set(ids)) != len(ids):
            raise serializers.ValidationError({'states': "state ids must be unique"})
        initial = [state['id'] for state in states if state['initial']]
        if len(initial) != 1:
            raise serializers.ValidationError({'states': f"exactly one initial state required, found {len(initial)}"})

        known = set(ids)
        edges = {state_id: set() for state_id in ids}
        seen = set()
        for transition in attrs['transitions']:
            source = transition['from']
            if source not in known:
                raise serializers.ValidationError({'transitions': f"unknown source state {source!r}"})
            targets = [o['to'] for o in transition.get('options', [])] if transition['trigger'] == 'vote' \
                else [transition['to']]
            for target in targets:
                if target not in known:
                    raise serializers.ValidationError({'transitions': f"unknown target state {target!r}"})
                edges[source].add(target)
            if transition['trigger'] in ('vote', 'auto'):
                key = (source, transition['trigger'])
                if key in seen:
                    raise serializers.ValidationError(
                        {'transitions': f"state {source!r} has more than one {transition['trigger']} transition"}
                    )
                seen.add(key)

        reached = {initial[0]}
        queue = deque(reached)
        while queue:
            for target in edges[queue.popleft()]:
                if target not in reached:
                    reached.add(target)
                    queue.append(target)
        unreachable = sorted(known - reached)
        if unreachable:
            raise serializers.ValidationError({'states': f"unreachable from the initial state: {', '.join(unreachable)}"})
        return attrs
