"""Training log and evaluation report writers."""

from mimo_deblur.adapters.reports.eval_report import read_eval_summary, write_eval_report
from mimo_deblur.adapters.reports.train_log import TrainLogWriter, read_train_log

__all__ = ["TrainLogWriter", "read_eval_summary", "read_train_log", "write_eval_report"]
