"""
Study CSV Files
One row per (sample level, estimator), full-precision floats, LF line endings
"""
import logging
import math

import pandas as pd

from config.defaults import CSV_FLOAT_FORMAT, CSV_LIST_SEPARATOR
from montecarlo.study import StudyReport, StudyRow

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["n_samples", "estimator", "mean", "band_low", "band_high", "q_low", "q_high",
               "true_value", "reference_biased_value", "poisoned_count", "trimmed_mean",
               "exploding_runs", "problem", "confidence_level", "estimates"]


def _join_estimates(values):
    return CSV_LIST_SEPARATOR.join(CSV_FLOAT_FORMAT % value for value in values)


def _split_estimates(text):
    if not isinstance(text, str) or not text:
        return ()
    return tuple(float(item) for item in text.split(CSV_LIST_SEPARATOR))


def study_frame(report: StudyReport) -> pd.DataFrame:
    """Study rows as a DataFrame with the CSV column order"""
    records = [row.csv_record() + (row.trimmed_mean, row.exploding_runs, report.problem,
                                   report.confidence_level, _join_estimates(row.estimates))
               for row in report.rows]
    frame = pd.DataFrame.from_records(records, columns=CSV_COLUMNS)
    for column in ("n_samples", "poisoned_count", "exploding_runs"):
        frame[column] = frame[column].astype("int64")
    for column in ("true_value", "reference_biased_value", "trimmed_mean", "confidence_level"):
        frame[column] = frame[column].astype("float64")
    return frame


def emit_csv(report: StudyReport, path) -> None:
    """Write the study rows; empty studies give a header-only file"""
    frame = study_frame(report)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        frame.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d study rows to %s", len(frame), path)


def _optional(value):
    value = float(value)
    return None if math.isnan(value) else value


def load_csv(path) -> StudyReport:
    """Study rows, problem name and confidence level read back from a CSV file written by emit_csv"""
    frame = pd.read_csv(path, dtype={"estimator": str, "problem": str, "estimates": str},
                        keep_default_na=False, na_values={"true_value": [""], "reference_biased_value": [""],
                                                          "trimmed_mean": [""]},
                        float_precision="round_trip", encoding="utf-8")
    missing = [column for column in CSV_COLUMNS if column not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    records = frame.to_dict(orient="records")
    rows = tuple(
        StudyRow(
            n_samples=int(record["n_samples"]),
            estimator=str(record["estimator"]),
            mean=float(record["mean"]),
            band_low=float(record["band_low"]),
            band_high=float(record["band_high"]),
            q_low=float(record["q_low"]),
            q_high=float(record["q_high"]),
            true_value=_optional(record["true_value"]),
            reference_biased_value=_optional(record["reference_biased_value"]),
            poisoned_count=int(record["poisoned_count"]),
            trimmed_mean=_optional(record["trimmed_mean"]),
            estimates=_split_estimates(record["estimates"]),
            exploding_runs=int(record["exploding_runs"]),
        )
        for record in records
    )
    problem = str(records[0]["problem"]) if records else ""
    confidence = float(records[0]["confidence_level"]) if records else 0.0
    return StudyReport(problem=problem, confidence_level=confidence, rows=rows)
