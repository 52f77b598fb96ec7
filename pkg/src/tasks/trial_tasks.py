"""Celery tasks for experiment trials"""
import logging
from typing import List

from ..core.celery_app import celery_app
from ..models.experiment import ExperimentConfig
from ..services.experiment_service import run_trial

logger = logging.getLogger(__name__)


@celery_app.task(name="src.tasks.trial_tasks.run_trial_task")
def run_trial_task(config: dict, trial: int) -> List[dict]:
    """Run one trial from a JSON experiment config; returns plain record dicts"""
    experiment = ExperimentConfig.model_validate(config)
    records = run_trial(experiment, trial)
    logger.info("✅ Trial %d finished with %d records", trial, len(records))
    return [record.model_dump() for record in records]
