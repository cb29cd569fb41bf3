"""
NSL-KDD parsing and preprocessing.

Raw files have 41 feature fields, a label and an optional difficulty score per line.
The encoder is fit on training records only: the three categorical features get one-hot
blocks over their training vocabularies and the 38 numeric features are min-max scaled
to the training ranges. Labels map to 0 for 'normal' and 1 for any attack.

"""
import io
import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from ..shared.artifacts import write_bytes
from ..utils import ValidationError


logger = logging.getLogger(__name__)

FEATURES = [
    'duration', 'protocol_type', 'service', 'flag', 'src_bytes', 'dst_bytes', 'land',
    'wrong_fragment', 'urgent', 'hot', 'num_failed_logins', 'logged_in',
    'num_compromised', 'root_shell', 'su_attempted', 'num_root', 'num_file_creations',
    'num_shells', 'num_access_files', 'num_outbound_cmds', 'is_host_login',
    'is_guest_login', 'count', 'srv_count', 'serror_rate', 'srv_serror_rate',
    'rerror_rate', 'srv_rerror_rate', 'same_srv_rate', 'diff_srv_rate',
    'srv_diff_host_rate', 'dst_host_count', 'dst_host_srv_count',
    'dst_host_same_srv_rate', 'dst_host_diff_srv_rate', 'dst_host_same_src_port_rate',
    'dst_host_srv_diff_host_rate', 'dst_host_serror_rate', 'dst_host_srv_serror_rate',
    'dst_host_rerror_rate', 'dst_host_srv_rerror_rate']

CATEGORICAL = ['protocol_type', 'service', 'flag']
NUMERIC = [c for c in FEATURES if c not in CATEGORICAL]
COLUMNS = FEATURES + ['label', 'difficulty']

NORMAL_LABEL = 'normal'
REPORTED_INPUT_DIM = 121


#############
## PARSING ##
#############

def _read_text(source):
    if hasattr(source, 'read'):
        text = source.read()
    else:
        with open(source, 'rb') as f:
            text = f.read()

    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            line = text[:e.start].count(b'\n') + 1
            raise ValidationError("Line {}: not valid UTF-8".format(line)) from e
    return text


def parse(source):
    """
    Parse an NSL-KDD file (KDDTrain+.txt, KDDTest+.txt, KDDTest-21.txt).

    Every non-blank line must have 42 fields, or 43 with the trailing difficulty
    score. Numeric features must parse as finite numbers and the label must be
    non-empty. An empty file gives an empty table.

    Parameters
    ----------
    source : str, path-like, or file-like
        File path, or a text or byte stream.

    Returns
    -------
    pd.DataFrame
        One row per record with columns ``COLUMNS``. Numeric features are float64,
        ``difficulty`` is a nullable integer.

    Raises
    ------
    ValidationError
        Citing the 1-based line number of the first malformed line.

    """
    lines = pd.Series(_read_text(source).splitlines(), dtype=object)
    lines.index = lines.index + 1  # line numbers
    lines = lines[lines.str.strip() != '']

    if len(lines) == 0:
        df = pd.DataFrame({c: pd.Series(dtype=object) for c in COLUMNS})
        df[NUMERIC] = df[NUMERIC].astype(float)
        df['difficulty'] = df['difficulty'].astype('Int64')
        return df

    fields = lines.str.split(',', expand=True)
    counts = fields.notna().sum(axis=1)
    bad = counts[~counts.isin([42, 43])]
    if len(bad) > 0:
        raise ValidationError("Line {}: expected 42 or 43 fields, found {}".format(
                bad.index[0], bad.iloc[0]))

    if fields.shape[1] == 42:
        fields[42] = None
    fields.columns = COLUMNS
    fields = fields.apply(lambda s: s.str.strip())

    df = fields[FEATURES + ['label']].copy()
    for col in NUMERIC:
        values = pd.to_numeric(df[col], errors='coerce')
        invalid = ~np.isfinite(values.to_numpy(dtype=float))
        if invalid.any():
            line = df.index[invalid][0]
            raise ValidationError("Line {}: field '{}' is not a finite number: "
                                  "'{}'".format(line, col, df.at[line, col]))
        df[col] = values.astype(float)

    empty_label = df['label'].isna() | (df['label'] == '')
    if empty_label.any():
        raise ValidationError("Line {}: label is empty".format(df.index[empty_label][0]))

    difficulty = pd.to_numeric(fields['difficulty'], errors='coerce')
    if (difficulty.isna() & fields['difficulty'].notna()).any():
        line = difficulty.index[difficulty.isna() & fields['difficulty'].notna()][0]
        raise ValidationError("Line {}: difficulty is not an integer".format(line))
    df['difficulty'] = difficulty.astype('Int64')

    df = df.reset_index(drop=True)
    counts = class_counts(df)
    logger.info("Parsed {} records: {} normal, {} attack".format(
            len(df), counts['normal'], counts['attack']))
    return df


def class_counts(records):
    """
    Number of normal and attack records.

    Parameters
    ----------
    records : pd.DataFrame
        As returned by ``parse()``.

    Returns
    -------
    OrderedDict
        Keys 'normal' and 'attack'.

    """
    normal = int((records['label'] == NORMAL_LABEL).sum())
    return OrderedDict([('normal', normal), ('attack', len(records) - normal)])


##############
## ENCODING ##
##############

class EncoderState(object):
    """
    Fitted preprocessing: an ordered vocabulary per categorical feature and a (min,
    max) range per numeric feature, both learned from training data.

    Output columns follow the raw feature order, with each categorical feature
    replaced in place by its one-hot block (e.g. 'protocol_type=tcp').

    Parameters
    ----------
    vocabularies : dict of str -> list of str
    ranges : dict of str -> (float, float)

    """
    def __init__(self, vocabularies, ranges):
        for col in CATEGORICAL:
            if len(vocabularies.get(col, [])) == 0:
                raise ValidationError("Vocabulary for '{}' is empty".format(col))
        for col in NUMERIC:
            if col not in ranges:
                raise ValidationError("No range recorded for '{}'".format(col))
            lo, hi = ranges[col]
            if not lo <= hi:
                raise ValidationError("Range for '{}' has min > max".format(col))

        self.vocabularies = OrderedDict((c, list(vocabularies[c])) for c in CATEGORICAL)
        self.ranges = OrderedDict((c, (float(ranges[c][0]), float(ranges[c][1])))
                                  for c in NUMERIC)

    @property
    def columns(self):
        cols = []
        for col in FEATURES:
            if col in self.vocabularies:
                cols += ['{}={}'.format(col, v) for v in self.vocabularies[col]]
            else:
                cols.append(col)
        return cols

    @property
    def output_dim(self):
        return len(NUMERIC) + sum(len(v) for v in self.vocabularies.values())

    @property
    def degenerate(self):
        """Numeric columns that were constant in the training data."""
        return [c for c, (lo, hi) in self.ranges.items() if lo == hi]

    @classmethod
    def from_dict(cls, d):
        return cls(d['vocabularies'], {k: tuple(v) for k, v in d['ranges'].items()})

    def to_dict(self):
        return OrderedDict([
            ('vocabularies', OrderedDict(self.vocabularies)),
            ('ranges', OrderedDict((k, list(v)) for k, v in self.ranges.items())),
            ('output_dim', self.output_dim)])


def fit_encoder(train, expected_dim=None):
    """
    Learn vocabularies (sorted distinct values) and numeric ranges from training
    records. Test data must never be passed here.

    The resulting input dimension is always logged. The published network input is
    121 wide, while canonical KDDTrain+ gives 122, so any difference from 121 is
    logged as a warning.

    Parameters
    ----------
    train : pd.DataFrame
        Parsed training records.
    expected_dim : int, optional
        If provided, a different computed dimension is a ValidationError.

    Returns
    -------
    EncoderState

    """
    if len(train) == 0:
        raise ValidationError("Cannot fit an encoder on empty training data")

    vocabularies = {c: sorted(train[c].unique()) for c in CATEGORICAL}
    ranges = {c: (float(train[c].min()), float(train[c].max())) for c in NUMERIC}
    enc = EncoderState(vocabularies, ranges)

    logger.info("Encoder input dimension: {} ({} numeric + {} one-hot)".format(
            enc.output_dim, len(NUMERIC), enc.output_dim - len(NUMERIC)))
    if enc.output_dim != REPORTED_INPUT_DIM:
        logger.warning("Encoder input dimension {} differs from the published "
                       "{}".format(enc.output_dim, REPORTED_INPUT_DIM))
    if enc.degenerate:
        logger.info("Constant training columns, encoded as 0: {}".format(enc.degenerate))

    if expected_dim is not None and enc.output_dim != expected_dim:
        raise ValidationError("Encoder input dimension is {}, expected {}".format(
                enc.output_dim, expected_dim))
    return enc


@dataclass
class DesignMatrix:
    """
    Numeric matrix ready for the network, with binary labels (1 = attack).

    ``report`` counts what the transform had to repair: 'unseen' maps each
    categorical feature to its number of values missing from the training
    vocabulary, and 'clipped' counts numeric values outside the training range.

    """
    X: np.ndarray
    y: np.ndarray
    columns: list
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ValidationError("Design matrix has {} rows but {} labels".format(
                    len(self.X), len(self.y)))
        if self.X.shape[1] != len(self.columns):
            raise ValidationError("Design matrix has {} columns but {} names".format(
                    self.X.shape[1], len(self.columns)))
        if not np.all(np.isfinite(self.X)):
            raise ValidationError("Design matrix contains non-finite entries")

    def __len__(self):
        return len(self.y)

    @property
    def attack_ratio(self):
        return float(np.mean(self.y)) if len(self.y) else 0.0

    def take(self, idx):
        return DesignMatrix(self.X[idx], self.y[idx], list(self.columns))


def transform(enc, records):
    """
    Encode records with a fitted encoder.

    Categorical values get one-hot blocks over the training vocabulary, with unseen
    values mapping to an all-zero block. Numeric values are scaled to (v - min) /
    (max - min) and clipped to [0, 1]; constant training columns map to 0. Unseen
    values and clipped values are counted in the matrix's report.

    Parameters
    ----------
    enc : EncoderState
    records : pd.DataFrame
        Parsed records.

    Returns
    -------
    DesignMatrix

    """
    blocks = []
    unseen = OrderedDict()
    clipped = 0

    for col in FEATURES:
        if col in enc.vocabularies:
            cat = pd.Categorical(records[col], categories=enc.vocabularies[col])
            unseen[col] = int((cat.isna() & records[col].notna().to_numpy()).sum())
            block = pd.get_dummies(cat, prefix=col, prefix_sep='=', dtype=float)
            blocks.append(block.to_numpy(dtype=float).reshape(
                    len(records), len(enc.vocabularies[col])))
        else:
            lo, hi = enc.ranges[col]
            v = records[col].to_numpy(dtype=float)
            if hi > lo:
                scaled = (v - lo) / (hi - lo)
            else:
                scaled = np.zeros_like(v)
            outside = (scaled < 0) | (scaled > 1)
            clipped += int(outside.sum())
            blocks.append(np.clip(scaled, 0.0, 1.0)[:, None])

    X = np.hstack(blocks) if len(records) else np.zeros((0, enc.output_dim))
    y = (records['label'] != NORMAL_LABEL).to_numpy(dtype=int)
    report = {'rows': len(records), 'unseen': dict(unseen), 'clipped': clipped}

    n_unseen = sum(unseen.values())
    if n_unseen:
        logger.info("Unseen categorical values mapped to zero blocks: {}".format(
                {k: v for k, v in unseen.items() if v}))
    if clipped:
        logger.warning("Clipped {} numeric values outside the training range".format(
                clipped))

    return DesignMatrix(X, y, enc.columns, report)


##############
## SAMPLING ##
##############

def _check_strata(y):
    counts = np.bincount(np.asarray(y, dtype=int), minlength=2)
    for label, n in enumerate(counts):
        if 0 < n < 2:
            raise ValidationError("Class {} has only {} sample; stratification needs "
                                  "at least 2".format(label, n))


def split(matrix, fraction, rng_seed):
    """
    Stratified split into a fitting part and a validation part.

    Parameters
    ----------
    matrix : DesignMatrix
    fraction : float
        Share of rows in the fitting part, strictly between 0 and 1.
    rng_seed : int

    Returns
    -------
    (DesignMatrix, DesignMatrix)
        Rows keep their original relative order.

    """
    if not 0 < fraction < 1:
        raise ValidationError("Please provide a split fraction between 0 and 1")
    _check_strata(matrix.y)

    fit_idx, val_idx = train_test_split(np.arange(len(matrix)), train_size=fraction,
                                        stratify=matrix.y, random_state=rng_seed)
    return matrix.take(np.sort(fit_idx)), matrix.take(np.sort(val_idx))


def subsample(matrix, n_rows, rng_seed):
    """
    Stratified subsample of ``n_rows`` rows, or the whole matrix if it's no larger.

    """
    if n_rows is None or n_rows >= len(matrix):
        return matrix
    if n_rows < 2:
        raise ValidationError("Please provide a subsample size of at least 2")
    _check_strata(matrix.y)

    idx, _ = train_test_split(np.arange(len(matrix)), train_size=n_rows,
                              stratify=matrix.y, random_state=rng_seed)
    return matrix.take(np.sort(idx))


###########
## CACHE ##
###########

def save_design_matrix(path, matrix):
    """
    Cache a design matrix as an ``.npz`` archive with arrays 'X', 'y' (little-endian
    float64) and 'columns'.

    """
    buf = io.BytesIO()
    np.savez(buf, X=matrix.X.astype('<f8'), y=matrix.y.astype('<f8'),
             columns=np.array(matrix.columns, dtype=str))
    return write_bytes(path, buf.getvalue())


def load_design_matrix(path):
    with np.load(path, allow_pickle=False) as data:
        return DesignMatrix(X=data['X'].astype(float), y=data['y'].astype(int),
                            columns=[str(c) for c in data['columns']])
