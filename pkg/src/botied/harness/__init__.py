from .config import MetricConfig, ProblemConfig, RunConfig, dump_config, load_config, save_config
from .runner import RunError, RunRecord, reference_point, run_bo
from .summary import (SummaryRow, TimingRow, aggregate, read_records, summary_csv, summary_text,
                      timing_benchmark, timing_csv)
