"""
reports module contains the aggregate report definitions written at the end of an evaluation
"""

from __future__ import annotations

from collections.abc import Sequence

from pydantic import BaseModel, computed_field

TABLE_COLUMNS = ("policy", "episodes", "SR(%)", "SPL(%)", "SCT(%)", "collisions", "time(s)")


class MetricsReport(BaseModel):
    """
    Success rate, SPL and SCT of one policy over one episode set, as fractions
    """

    policy: str = ""
    episodes: int
    success_rate: float
    spl: float
    sct: float
    mean_collisions: float
    mean_time: float

    @computed_field  # type: ignore[prop-decorator]
    @property
    def success_rate_percent(self) -> float:
        return 100.0 * self.success_rate

    @computed_field  # type: ignore[prop-decorator]
    @property
    def spl_percent(self) -> float:
        return 100.0 * self.spl

    @computed_field  # type: ignore[prop-decorator]
    @property
    def sct_percent(self) -> float:
        return 100.0 * self.sct

    def row(self) -> tuple[str, ...]:
        return (
            self.policy or "-",
            str(self.episodes),
            f"{self.success_rate_percent:.1f}",
            f"{self.spl_percent:.1f}",
            f"{self.sct_percent:.1f}",
            f"{self.mean_collisions:.2f}",
            f"{self.mean_time:.2f}",
        )


class ComparisonReport(BaseModel):
    """One report per policy evaluated on the same episode set"""

    reports: list[MetricsReport]

    def to_table(self) -> str:
        """
        Render the reports as an aligned text table, one row per policy
        :return: the table, newline terminated
        """
        return render_table([report.row() for report in self.reports])


def render_table(rows: Sequence[Sequence[str]]) -> str:
    """Left aligned first column, right aligned numbers"""
    table = [TABLE_COLUMNS, *rows]
    widths = [max(len(row[index]) for row in table) for index in range(len(TABLE_COLUMNS))]
    lines = [
        "  ".join(
            cell.ljust(width) if index == 0 else cell.rjust(width)
            for index, (cell, width) in enumerate(zip(row, widths, strict=True))
        ).rstrip()
        for row in table
    ]
    return "\n".join(lines) + "\n"
