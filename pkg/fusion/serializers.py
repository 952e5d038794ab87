from rest_framework import serializers

from fusion.fuse import Correction
from fusion.sensors import MOTIONS

EXPERIMENTS = ('single', 'static', 'bar')


class NoiseModelSerializer(serializers.Serializer):
    position_sigma_mm = serializers.FloatField(min_value=0.0, default=0.0)
    rotation_sigma_deg = serializers.FloatField(min_value=0.0, default=0.0)
    drift_mm_per_s = serializers.FloatField(min_value=0.0, default=0.0)
    drift_deg_per_s = serializers.FloatField(min_value=0.0, default=0.0)
    marker_loss = serializers.FloatField(min_value=0.0, max_value=0.99, default=0.0)


class ProfileSerializer(NoiseModelSerializer):
    motion = serializers.ChoiceField(choices=MOTIONS)


class FusionConfigSerializer(serializers.Serializer):
    profile = serializers.CharField(max_length=64, required=False)
    motion = serializers.ChoiceField(choices=MOTIONS, required=False)
    noise = NoiseModelSerializer(required=False)
    experiment = serializers.ChoiceField(choices=EXPERIMENTS, default='bar')
    samples = serializers.IntegerField(min_value=2, default=17500)
    relative_hz = serializers.FloatField(min_value=1.0, default=90.0)
    absolute_hz = serializers.FloatField(min_value=0.1, default=12.0)
    bar_length_m = serializers.FloatField(min_value=0.01, default=0.5)
    policy = serializers.ChoiceField(choices=[c.value for c in Correction], default=Correction.SNAP.value)
    blend_window_ms = serializers.FloatField(min_value=0.0, default=100.0)
    seed = serializers.IntegerField(min_value=0, default=42)

    def validate(self, attrs):
        if 'profile' not in attrs and 'noise' not in attrs:
            raise serializers.ValidationError({'profile': "name a profile or give an inline noise model"})
        if 'profile' not in attrs and 'motion' not in attrs and attrs['experiment'] != 'static':
            raise serializers.ValidationError({'motion': "an inline noise model needs a motion"})
        if attrs['absolute_hz'] > attrs['relative_hz']:
            raise serializers.ValidationError({'absolute_hz': "absolute rate must not exceed the relative rate"})
        return attrs
