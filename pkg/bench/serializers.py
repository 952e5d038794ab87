from rest_framework import serializers

from bench.models import ExperimentRun, RunResult
from traces.synthesis import TRACE_KINDS


class SweepField(serializers.Field):
    """A sweep axis: a list, a single value or a comma separated string."""

    default_error_messages = {
        'empty': "At least one value is required.",
        'invalid': "Invalid sweep value {value!r}.",
    }

    def parse_item(self, item):
        raise NotImplementedError

    def to_internal_value(self, data):
        if isinstance(data, str):
            items = [item.strip() for item in data.split(',') if item.strip()]
        elif isinstance(data, (list, tuple)):
            items = list(data)
        else:
            items = [data]
        if not items:
            self.fail('empty')
        values = []
        for item in items:
            values.extend(self.parse_item(item))
        return tuple(dict.fromkeys(values))

    def to_representation(self, value):
        return list(value)


class ClientCountsField(SweepField):
    """Client counts as ``2..10``, ``2,4,8`` or a list."""

    def parse_item(self, item):
        if isinstance(item, bool):
            self.fail('invalid', value=item)
        if isinstance(item, str) and '..' in item:
            low, _, high = item.partition('..')
            try:
                low, high = int(low), int(high)
            except ValueError:
                self.fail('invalid', value=item)
            if low > high:
                self.fail('invalid', value=item)
            return range(low, high + 1)
        try:
            return [int(item)]
        except (TypeError, ValueError):
            self.fail('invalid', value=item)


class IntervalsField(SweepField):
    def parse_item(self, item):
        if isinstance(item, bool):
            self.fail('invalid', value=item)
        try:
            value = float(item)
        except (TypeError, ValueError):
            self.fail('invalid', value=item)
        if not value > 0:
            self.fail('invalid', value=item)
        return [value]


class SwitchesField(SweepField):
    """Compression settings as ``on,off``, booleans or a list of either."""

    TRUE = {'on', 'true', 'yes', '1'}
    FALSE = {'off', 'false', 'no', '0'}

    def parse_item(self, item):
        if isinstance(item, bool):
            return [item]
        text = str(item).strip().lower()
        if text in self.TRUE:
            return [True]
        if text in self.FALSE:
            return [False]
        self.fail('invalid', value=item)

    def to_representation(self, value):
        return ['on' if v else 'off' for v in value]


class ExperimentConfigSerializer(serializers.Serializer):
    clients = ClientCountsField(default=tuple(range(2, 11)))
    interval_ms = IntervalsField(default=(10.0, 100.0))
    compression = SwitchesField(default=(True, False))
    trace = serializers.ChoiceField(choices=TRACE_KINDS, default='dance')
    trace_rate_hz = serializers.FloatField(min_value=1.0, default=100.0)
    seed = serializers.IntegerField(min_value=0, default=42)
    duration_s = serializers.FloatField(min_value=0.001, default=10.0)
    cap_kbps = serializers.FloatField(min_value=0.001, allow_null=True, default=275.0)
    latency_ms = serializers.FloatField(min_value=0.0, default=20.0)
    jitter_ms = serializers.FloatField(min_value=0.0, default=5.0)
    queue_kb = serializers.FloatField(min_value=0.001, default=64.0)
    repetitions = serializers.IntegerField(min_value=1, default=1)
    background_bps = serializers.FloatField(min_value=0.0, default=0.0)
    roster = serializers.CharField(max_length=64, required=False)
    workers = serializers.IntegerField(min_value=1, default=1)
    max_clients = serializers.IntegerField(min_value=2, default=10)

    def validate(self, attrs):
        if max(attrs['clients']) > attrs['max_clients']:
            raise serializers.ValidationError(
                {'clients': f"client counts must lie in 2..{attrs['max_clients']}"})
        if min(attrs['clients']) < 2:
            raise serializers.ValidationError({'clients': "a session needs at least 2 clients"})
        return attrs


class RunResultSerializer(serializers.ModelSerializer):
    class Meta:
        model = RunResult
        fields = '__all__'


class ExperimentRunSerializer(serializers.ModelSerializer):
    result_count = serializers.IntegerField(source='results.count', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = ('id', 'seed', 'trace_kind', 'duration_s', 'config', 'report_path',
                  'result_count', 'created_at')
        read_only_fields = ('id', 'seed', 'trace_kind', 'duration_s', 'config', 'report_path', 'created_at')
