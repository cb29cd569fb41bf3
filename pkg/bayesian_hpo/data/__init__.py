from .load_table import LoadNSLKDD, LoadSettings
from .nslkdd import (DesignMatrix, EncoderState, class_counts, fit_encoder,
        load_design_matrix, parse, save_design_matrix, split, subsample, transform)
