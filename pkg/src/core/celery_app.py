"""Celery app configuration"""
from celery import Celery
from .config import settings

# Create Celery instance
celery_app = Celery(
    "cola",
    broker=settings.CELERY_BROKER_URL,
    backend=settings.CELERY_RESULT_BACKEND,
    include=["src.tasks.trial_tasks"],
)

# Configure Celery
celery_app.conf.update(
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    result_expires=3600,
    task_always_eager=settings.CELERY_ALWAYS_EAGER,
    task_eager_propagates=True,
    worker_prefetch_multiplier=1,
    task_routes={
        "src.tasks.trial_tasks.*": {"queue": "trials"},
    },
)

