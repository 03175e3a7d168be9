from .tasks import AnnotationTask, build_tasks, render_task
from .store import ConjunctAnnotation, SubmissionResult, TaskStore

__all__ = [
    "AnnotationTask",
    "ConjunctAnnotation",
    "SubmissionResult",
    "TaskStore",
    "build_tasks",
    "render_task",
]
