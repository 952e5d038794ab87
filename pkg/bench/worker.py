"""Entry points for sweep worker processes.

Only model-free modules are imported at the top so a freshly started
worker can load this module before Django is set up.
"""
import os


def setup_worker():
    import django
    from django.apps import apps

    if not apps.ready:
        os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'posedeck.settings')
        django.setup()


def run_spec(spec, config):
    setup_worker()
    from bench.runner import run_single

    return run_single(spec, config)
