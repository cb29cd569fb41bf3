from .reporting import (describe_datasets, emit_landscape, evaluate_incumbent,
        read_trials, write_history_artifacts)
from .study import (HyperparameterStudy, StudyConfig, StudyData, prepare_data,
        run_comparison, run_study)
