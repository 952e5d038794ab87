from django.contrib import admin
from .models import ExperimentRun, RunResult


class RunResultInline(admin.TabularInline):
    model = RunResult
    extra = 0
    fields = ('clients', 'interval_ms', 'compression', 'repetition', 'latency_mean_ms',
              'serialized_bytes_per_s', 'drop_rate')
    readonly_fields = fields


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'trace_kind', 'seed', 'duration_s', 'report_path', 'created_at')
    list_filter = ('trace_kind', 'created_at')
    search_fields = ('report_path',)
    inlines = [RunResultInline]


@admin.register(RunResult)
class RunResultAdmin(admin.ModelAdmin):
    list_display = ('run', 'clients', 'interval_ms', 'compression', 'latency_mean_ms',
                    'latency_p95_ms', 'serialized_bytes_per_s', 'drop_rate')
    list_filter = ('compression', 'interval_ms', 'clients', 'run')
    ordering = ('run', 'clients', 'interval_ms')
