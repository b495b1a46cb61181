from collections.abc import Sequence

import numpy as np
import pandas as pd

from errors import DatasetError
from glm_irls import Dataset


class DatasetLoader:
    """Reads comma-separated files with a header row into Datasets"""

    def read_csv(self, source) -> pd.DataFrame:
        """Read every cell as text; conversion happens per used column."""
        try:
            frame = pd.read_csv(
                source,
                sep=",",
                encoding="utf-8",
                dtype=str,
                keep_default_na=False,
            )
        except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
            raise DatasetError(f"could not parse CSV: {e}") from e
        except UnicodeDecodeError as e:
            raise DatasetError("CSV must be UTF-8 encoded") from e

        if frame.empty:
            raise DatasetError("CSV has a header but no data rows")
        frame.columns = [str(c).strip() for c in frame.columns]
        return frame

    def _numeric_column(self, frame: pd.DataFrame, name: str) -> np.ndarray:
        if name not in frame.columns:
            raise DatasetError(f"column '{name}' not found")
        raw = frame[name].str.strip()
        values = pd.to_numeric(raw, errors="coerce")
        bad = values.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            # Data rows start on line 2 of the file
            raise DatasetError(
                f"column '{name}' has non-numeric cell {raw.iloc[row]!r} "
                f"on line {row + 2}"
            )
        return values.to_numpy(dtype=float)

    def build_dataset(
        self,
        frame: pd.DataFrame,
        outcome: str,
        exposure: str | None,
        covariates: Sequence[str] = (),
    ) -> Dataset:
        """Pick the named columns out of ``frame``.

        No imputation: every used cell must parse as a number, and outcome and
        exposure must be coded 0/1.
        """
        covariates = list(covariates)
        used = [outcome] + ([exposure] if exposure else []) + covariates
        duplicates = sorted({c for c in used if used.count(c) > 1})
        if duplicates:
            raise DatasetError(f"column listed more than once: {', '.join(duplicates)}")

        return Dataset(
            outcome=self._numeric_column(frame, outcome),
            exposure=self._numeric_column(frame, exposure) if exposure else None,
            covariates=(
                np.column_stack([self._numeric_column(frame, c) for c in covariates])
                if covariates
                else None
            ),
            covariate_names=covariates,
            outcome_name=outcome,
            exposure_name=exposure or "exposure",
        )

    def load(
        self,
        source,
        outcome: str,
        exposure: str | None,
        covariates: Sequence[str] = (),
    ) -> Dataset:
        return self.build_dataset(self.read_csv(source), outcome, exposure, covariates)

    def write_csv(self, dataset: Dataset, path) -> None:
        dataset.to_frame().to_csv(path, index=False, lineterminator="\n")
