"""
Atomic writers for study artifacts. Each helper writes to a temporary file in the
destination directory and then renames it into place, so an interrupted study never
leaves a half-written artifact behind.

"""
import json
import logging
import os
import tempfile

import pandas as pd


logger = logging.getLogger(__name__)


def _replace(path, content, mode):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)

    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix='.part')
    try:
        if mode == 'w':
            with os.fdopen(fd, 'w', newline='\n') as f:
                f.write(content)
        else:
            with os.fdopen(fd, 'wb') as f:
                f.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise

    logger.debug("Wrote {}".format(path))
    return path


def write_text(path, text):
    """
    Atomically replace the file at ``path`` with ``text``.

    Parameters
    ----------
    path : str
    text : str

    Returns
    -------
    str
        The path written.

    """
    return _replace(path, text, 'w')


def write_bytes(path, data):
    """
    Atomically replace the file at ``path`` with binary ``data``.

    """
    return _replace(path, data, 'wb')


def write_json(path, obj):
    """
    Write a JSON document, indented, keys in insertion order.

    """
    return write_text(path, json.dumps(obj, indent=2) + '\n')


def write_jsonl(path, records):
    """
    Write one compact JSON object per line. The output is byte-for-byte reproducible
    for identical records.

    Parameters
    ----------
    path : str
    records : iterable of dict

    """
    lines = [json.dumps(r, separators=(', ', ': ')) for r in records]
    return write_text(path, ''.join(line + '\n' for line in lines))


def write_csv(path, df, float_format=None):
    """
    Write a DataFrame as CSV without its index.

    Parameters
    ----------
    path : str
    df : pd.DataFrame
    float_format : str, optional
        Passed to ``pd.DataFrame.to_csv()``, e.g. '%.2f' for percentages.

    """
    if not isinstance(df, pd.DataFrame):
        df = pd.DataFrame(df)

    return write_text(path, df.to_csv(index=False, float_format=float_format,
                                      lineterminator='\n'))
