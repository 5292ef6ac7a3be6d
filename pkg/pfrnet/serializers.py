from rest_framework import serializers

from .backbone import PRESETS
from .cfdm import HEAD_RESIDUAL_SOURCES
from .config import PROFILES, TrainConfig
from .exceptions import ConfigError
from .network import AblationVariant


class CommaListField(serializers.ListField):
    """List field that also accepts ``'a, b, c'`` text from config files."""

    def to_internal_value(self, data):
        if data is None:
            data = []
        elif isinstance(data, str):
            data = [item.strip() for item in data.split(',') if item.strip()]
        return super().to_internal_value(data)


class TrainConfigSerializer(serializers.Serializer):
    """Validates flat config values and builds a ``TrainConfig``"""
    profile = serializers.ChoiceField(choices=list(PROFILES))
    lr0 = serializers.FloatField()
    lr_decay_every = serializers.IntegerField(min_value=1)
    lr_decay_factor = serializers.FloatField()
    batch_size = serializers.IntegerField(min_value=1)
    epochs = serializers.IntegerField(min_value=1)
    max_steps = serializers.IntegerField(min_value=1, allow_null=True, required=False)
    lam = serializers.FloatField(min_value=0.0, max_value=1.0)
    head_residual = serializers.ChoiceField(choices=HEAD_RESIDUAL_SOURCES)
    variant = serializers.CharField()
    backbone = serializers.ChoiceField(choices=list(PRESETS))
    pretrained_weights = serializers.CharField(allow_null=True, required=False)
    resolution = serializers.IntegerField(min_value=32)
    seed = serializers.IntegerField(min_value=0)
    train_root = serializers.CharField()
    synthetic_samples = serializers.IntegerField(min_value=1)
    eval_roots = CommaListField(child=serializers.CharField(), required=False)
    augment = serializers.BooleanField()
    log_every = serializers.IntegerField(min_value=1)

    def validate_lr0(self, value):
        if value <= 0:
            raise serializers.ValidationError('Learning rate must be positive.')
        return value

    def validate_lr_decay_factor(self, value):
        if value < 1:
            raise serializers.ValidationError('Decay factor must be at least 1.')
        return value

    def validate_resolution(self, value):
        if value % 32:
            raise serializers.ValidationError('Resolution must be divisible by 32.')
        return value

    def validate_variant(self, value):
        try:
            return AblationVariant.parse(value).value
        except ValueError as exc:
            raise serializers.ValidationError(str(exc))

    def validate(self, attrs):
        if attrs.get('pretrained_weights') and attrs['backbone'] != 'res2net50':
            raise serializers.ValidationError(
                {'pretrained_weights': 'Pretrained weights only apply to the res2net50 backbone.'}
            )
        return attrs

    def create(self, validated_data):
        try:
            return TrainConfig(**validated_data)
        except ConfigError as exc:
            raise serializers.ValidationError(str(exc))


class MetricReportSerializer(serializers.Serializer):
    """Dataset-level metric summary, means rounded to 3 decimals"""
    dataset = serializers.CharField()
    model = serializers.CharField(allow_blank=True)
    s_alpha = serializers.FloatField(min_value=0.0, max_value=1.0)
    e_phi = serializers.FloatField(min_value=0.0, max_value=1.0)
    f_beta_w = serializers.FloatField(min_value=0.0, max_value=1.0)
    mae = serializers.FloatField(min_value=0.0, max_value=1.0)
    n_images = serializers.IntegerField(min_value=0)

    def to_representation(self, instance):
        if hasattr(instance, 'to_dict'):
            instance = instance.to_dict()
        return super().to_representation(instance)


class PredictionUploadSerializer(serializers.Serializer):
    """Image upload for the prediction endpoint"""
    image = serializers.ImageField()


class MapPairSerializer(serializers.Serializer):
    """Prediction map and ground truth for the metrics endpoint"""
    prediction = serializers.ImageField()
    ground_truth = serializers.ImageField()
