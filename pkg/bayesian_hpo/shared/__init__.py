from .artifacts import write_bytes, write_csv, write_json, write_jsonl, write_text
from .core import CoreTemplateSettings
