import logging

from django.conf import settings
from django.http import HttpResponse
from rest_framework import mixins, status, viewsets
from rest_framework.decorators import action
from rest_framework.response import Response

from bench.config import config_echo, experiment_config_from_dict, harness_defaults
from bench.models import ExperimentRun, RunResult, save_run
from bench.report import render_report
from bench.runner import run_experiment
from bench.serializers import ExperimentRunSerializer, RunResultSerializer
from utils.exceptions import ConfigError, PoseDeckError
from utils.permissions import IsStaffOrReadOnly

logger = logging.getLogger(__name__)


class ExperimentRunViewSet(mixins.CreateModelMixin, viewsets.ReadOnlyModelViewSet):
    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer
    permission_classes = [IsStaffOrReadOnly]
    filterset_fields = ('trace_kind', 'seed')

    def create(self, request, *args, **kwargs):
        """Run an experiment from the posted config and store it."""
        try:
            config = experiment_config_from_dict(request.data, harness_defaults(settings.POSEDECK))
            reports = run_experiment(config)
            run = save_run(config, reports, config_echo(config))
        except PoseDeckError as exc:
            logger.warning("experiment request rejected: %s", exc)
            body = {'status': 'error', 'message': str(exc)}
            if isinstance(exc, ConfigError):
                body['errors'] = exc.errors
            return Response(body, status=status.HTTP_400_BAD_REQUEST)
        logger.info("stored run %d with %d results", run.pk, len(reports))
        return Response(ExperimentRunSerializer(run).data, status=status.HTTP_201_CREATED)

    @action(detail=True, methods=['get'])
    def report(self, request, pk=None):
        run = self.get_object()
        try:
            text = render_report(run.reports())
        except PoseDeckError as exc:
            return Response({'status': 'error', 'message': str(exc)}, status=status.HTTP_404_NOT_FOUND)
        response = HttpResponse(text, content_type='text/csv')
        response['Content-Disposition'] = f'attachment; filename="run-{run.pk}.csv"'
        return response


class RunResultViewSet(viewsets.ReadOnlyModelViewSet):
    queryset = RunResult.objects.select_related('run')
    serializer_class = RunResultSerializer
    permission_classes = [IsStaffOrReadOnly]
    filterset_fields = ('run', 'clients', 'interval_ms', 'compression', 'repetition')
