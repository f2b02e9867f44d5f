"""Machine checks: identity residuals, inequality monitors, hypothesis scans and refinement studies."""

from .convergence import (ConvergenceReport, fitted_order, refinement_study,
                          spectral_oracle_circle)
from .monitors import (MonitorReport, MonitorRow, check_inequality, condition_scan,
                       monitored_times)
from .residuals import (identity_rhs_family, relative_gap, residual_bochner, residual_cor,
                        residual_li_yau, residual_prop, residual_thm2)

__all__ = [
    "ConvergenceReport", "MonitorReport", "MonitorRow", "check_inequality", "condition_scan",
    "fitted_order", "identity_rhs_family", "monitored_times", "refinement_study", "relative_gap",
    "residual_bochner", "residual_cor", "residual_li_yau", "residual_prop", "residual_thm2",
    "spectral_oracle_circle",
]
