"""Output service for curve files and reports"""
import csv
import json
import logging
import math
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Sequence

from jsonschema import Draft202012Validator
from pydantic import BaseModel
from referencing import Registry, Resource

from app.core.config import Config
from app.core.errors import ReportSchemaError
from app.core.procedures import UCP
from app.types.cutpoint import CurvePoint

logger = logging.getLogger(__name__)

CURVE_HEADER = ["n", "p_n", "dp_dn", "residual"]

# Report model name -> shipped schema file under Config.SCHEMA_DIR
SCHEMA_FILES = {
    "ProcedureReport": "procedure_report.schema.json",
    "AssumptionReport": "assumption_report.schema.json",
    "SimulationReport": "simulation_report.schema.json",
}


@lru_cache(maxsize=None)
def _load_schema_file(path: str) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _schema_registry() -> Registry:
    """Every shipped schema under its $id, so cross-file $refs resolve offline"""
    resources = []
    for filename in SCHEMA_FILES.values():
        schema = _load_schema_file(str(Config.SCHEMA_DIR / filename))
        resources.append((schema["$id"], Resource.from_contents(schema)))
    return Registry().with_resources(resources)


class OutputService:
    """Service for saving curves and reports"""

    @staticmethod
    def _digits() -> int:
        return Config.get_int("output", "significant_digits", default=12)

    @staticmethod
    def format_number(value: float) -> str:
        """Fixed significant-digit text for CSV cells"""
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "nan"
        return f"{value:.{OutputService._digits()}g}"

    @staticmethod
    def round_significant(data: Any) -> Any:
        """Round every float in a JSON-ready structure to the configured significant digits"""
        if isinstance(data, bool) or data is None:
            return data
        if isinstance(data, float):
            if not math.isfinite(data):
                return None
            return float(f"{data:.{OutputService._digits()}g}")
        if isinstance(data, dict):
            return {key: OutputService.round_significant(value) for key, value in data.items()}
        if isinstance(data, (list, tuple)):
            return [OutputService.round_significant(value) for value in data]
        return data

    @staticmethod
    def document(model: BaseModel) -> Dict[str, Any]:
        """JSON-ready payload of a model: keys by alias, floats rounded, non-finite floats as null"""
        return OutputService.round_significant(model.model_dump(mode="json", by_alias=True))

    @staticmethod
    def to_json(model: BaseModel) -> str:
        """
        Serialise a model by alias with rounded floats

        Report models with a shipped schema are validated first.

        Raises:
            ReportSchemaError: If the document does not match its schema
        """
        json_indent = Config.get("output", "json_indent", default=2)
        payload = OutputService.document(model)
        kind = type(model).__name__
        if kind in SCHEMA_FILES:
            OutputService.validate_document(payload, kind)
        return json.dumps(payload, indent=json_indent, ensure_ascii=False)

    # Schemas

    @staticmethod
    def load_schema(kind: str = "ProcedureReport") -> Dict[str, Any]:
        """Load the shipped schema for a report model name"""
        Config._ensure_initialized()
        if kind not in SCHEMA_FILES:
            raise ValueError(f"no schema for '{kind}' (known: {', '.join(SCHEMA_FILES)})")
        return _load_schema_file(str(Config.SCHEMA_DIR / SCHEMA_FILES[kind]))

    @staticmethod
    def validator(kind: str = "ProcedureReport") -> Draft202012Validator:
        schema = OutputService.load_schema(kind)
        Draft202012Validator.check_schema(schema)
        return Draft202012Validator(schema, registry=_schema_registry())

    @staticmethod
    def schema_violations(payload: Dict[str, Any], kind: str = "ProcedureReport") -> List[str]:
        """Every validation error of a payload against its schema, as "path: message" lines"""
        errors = sorted(
            OutputService.validator(kind).iter_errors(payload),
            key=lambda e: [str(part) for part in e.absolute_path],
        )
        return [f"{'/'.join(str(part) for part in e.absolute_path) or '<root>'}: {e.message}" for e in errors]

    @staticmethod
    def validate_document(payload: Dict[str, Any], kind: str = "ProcedureReport") -> None:
        """Raise ReportSchemaError when the payload does not validate"""
        problems = OutputService.schema_violations(payload, kind)
        if problems:
            for problem in problems:
                logger.error("%s document: %s", kind, problem)
            raise ReportSchemaError(
                f"{kind} document does not match its schema: {problems[0]}",
                payload.get("name") or payload.get("procedure"),
                problems,
            )

    @staticmethod
    def save_report(model: BaseModel, output_path: Path = None) -> Path:
        """
        Save a report document as JSON

        Args:
            model: Report to save
            output_path: Target file (defaults to Config.OUTPUT_DIR / report filename)

        Returns:
            Path to saved file
        """
        Config._ensure_initialized()
        if output_path is None:
            Config.ensure_directories()
            report_filename = Config.get("output", "report_filename", default="report.json")
            output_path = Config.OUTPUT_DIR / report_filename
        text = OutputService.to_json(model)
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(text)
        return output_path

    @staticmethod
    def write_curve_csv(points: Sequence[CurvePoint], output_path: Path) -> Path:
        """
        Write curve samples as CSV

        The first row is a `# ucp=<value>` comment for the reference line,
        followed by the header `n,p_n,dp_dn,residual` and one row per point.

        Args:
            points: Curve samples (one row each)
            output_path: Target CSV file

        Returns:
            Path to saved file
        """
        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        fmt = OutputService.format_number
        with open(output_path, "w", encoding="utf-8", newline="") as f:
            f.write(f"# ucp={fmt(UCP)}\n")
            writer = csv.writer(f)
            writer.writerow(CURVE_HEADER)
            for pt in points:
                writer.writerow([fmt(pt.n), fmt(pt.p_n), fmt(pt.dp_dn), fmt(pt.residual)])
        return output_path

    @staticmethod
    def read_curve_csv(input_path: Path) -> List[CurvePoint]:
        """Parse a curve CSV written by write_curve_csv"""
        with open(input_path, "r", encoding="utf-8", newline="") as f:
            rows = [line for line in f if not line.startswith("#")]
        reader = csv.DictReader(rows)
        return [
            CurvePoint(
                n=float(row["n"]),
                p_n=float(row["p_n"]),
                dp_dn=float(row["dp_dn"]),
                residual=float(row["residual"]),
            )
            for row in reader
        ]

    @staticmethod
    def write_curve_svg(points: Sequence[CurvePoint], output_path: Path, title: str = "") -> Path:
        """Plot n -> p_n with a dashed UCP line as SVG"""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        output_path = Path(output_path)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot([pt.n for pt in points], [pt.p_n for pt in points], "-" if len({pt.n for pt in points}) == len(points) else ".", color="black")
        ax.axhline(UCP, linestyle="--", color="gray", label="UCP")
        ax.set_xlabel("n")
        ax.set_ylabel("p_n")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(output_path, format="svg")
        plt.close(fig)
        return output_path
