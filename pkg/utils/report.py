# utils/report.py
# ───────────────────────────────────────────────────────────────────
# Writes experiment reports:
# 1) a lossless JSON document (sorted keys, shortest round-trip floats),
# 2) a fixed-schema CSV table per command, and
# 3) a short Markdown summary for humans.

import json
import logging
import math
import os
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd


def to_plain(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays, complex and Fraction values to JSON types."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, Fraction):
        return {"value": float(value), "exact": f"{value.numerator}/{value.denominator}"}
    return value


class ReportExporter:
    """
    Writes <out>/<name>.json or <out>/<name>.csv plus <out>/<name>.md.
    """

    def __init__(self, output_dir: str = "results", name: str = "report"):
        """
        Args:
          output_dir – folder for the report files
          name       – base filename (the command name)
        """
        self.output_dir = output_dir
        self.name = name
        self.output_json = os.path.join(output_dir, f"{name}.json")
        self.output_csv = os.path.join(output_dir, f"{name}.csv")
        self.output_md = os.path.join(output_dir, f"{name}.md")
        self.logger = logging.getLogger(__name__)

    def _ensure_directory_exists(self, filepath: str) -> None:
        directory = os.path.dirname(os.path.abspath(filepath))
        if directory and not os.path.exists(directory):
            self.logger.debug(f"Creating directory: {directory}")
            os.makedirs(directory, exist_ok=True)

    @staticmethod
    def render_json(report: Dict[str, Any]) -> str:
        return json.dumps(to_plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def export_json(self, report: Dict[str, Any]) -> str:
        """
        Raises:
          ValueError if report is empty
          RuntimeError if writing fails
        """
        if not report:
            raise ValueError("Cannot export an empty report")
        self.logger.info(f"Exporting report to JSON: {self.output_json}")
        try:
            self._ensure_directory_exists(self.output_json)
            with open(self.output_json, "w", encoding="utf-8", newline="\n") as f:
                f.write(self.render_json(report))
            return self.output_json
        except Exception as e:
            self.logger.error(f"Failed to export JSON: {str(e)}")
            raise RuntimeError(f"Failed to export JSON: {str(e)}") from e

    def export_csv(self, rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
        """
        One row per level/shell/dimension; columns fixed per command.

        Raises:
          ValueError if rows is empty
          RuntimeError if writing fails
        """
        if not rows:
            raise ValueError("Cannot export an empty table")
        self.logger.info(f"Exporting {len(rows)} rows to CSV: {self.output_csv}")
        try:
            self._ensure_directory_exists(self.output_csv)
            frame = pd.DataFrame([to_plain(row) for row in rows])
            if columns is not None:
                frame = frame.reindex(columns=columns)
            frame.to_csv(self.output_csv, index=False, lineterminator="\n")
            return self.output_csv
        except Exception as e:
            self.logger.error(f"Failed to export CSV: {str(e)}")
            raise RuntimeError(f"Failed to export CSV: {str(e)}") from e

    def export_markdown(self, title: str, headline: Dict[str, Any], rows: Sequence[Dict[str, Any]],
                        columns: Optional[List[str]] = None) -> str:
        """Summary: headline key/value list followed by the result table."""
        self.logger.info(f"Exporting summary to Markdown: {self.output_md}")
        try:
            self._ensure_directory_exists(self.output_md)
            with open(self.output_md, "w", encoding="utf-8", newline="\n") as f:
                f.write(f"# {title}\n\n")
                for key, value in headline.items():
                    f.write(f"**{key}:** {to_plain(value)}\n\n")
                if rows:
                    frame = pd.DataFrame([to_plain(row) for row in rows])
                    if columns is not None:
                        frame = frame.reindex(columns=columns)
                    f.write("---\n\n")
                    f.write("| " + " | ".join(frame.columns) + " |\n")
                    f.write("|" + "---|" * len(frame.columns) + "\n")
                    for record in frame.itertuples(index=False):
                        f.write("| " + " | ".join(_cell(v) for v in record) + " |\n")
                    f.write("\n")
                f.write("---\n\n")
                f.write("*Generated by qevar*\n")
            return self.output_md
        except Exception as e:
            self.logger.error(f"Failed to export Markdown: {str(e)}")
            raise RuntimeError(f"Failed to export Markdown: {str(e)}") from e


def _cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
