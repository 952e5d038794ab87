from rest_framework.routers import DefaultRouter
from .views import ExperimentRunViewSet, RunResultViewSet

router = DefaultRouter()
router.register(r'runs', ExperimentRunViewSet, basename='run')
router.register(r'results', RunResultViewSet, basename='result')

urlpatterns = router.urls
