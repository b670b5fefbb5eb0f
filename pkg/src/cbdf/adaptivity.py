"""Step-size control for the composed flow: the ratio-clamped controller,
the admissible-ratio lower bounds, and the adaptive driver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bdf_core import HistoryWindow, ImplicitSolveConfig
from .composition import composed_step, solve_alpha1
from .errors import NoAdmissibleRoot
from .problems import ODEProblem, bootstrap

_BISECT_TOL = 1e-4


def ratio_clamp(p: int) -> float:
    """Per-step growth/shrink factor ell_p keeping the sub-step root admissible."""
    if p == 1:
        return 2.0
    if 2 <= p <= 5:
        return 2.0 ** (1.0 / (2 * p - 3))
    if 6 <= p <= 8:
        return p ** (1.0 / (p * (p - 1)))
    raise ValueError(f"base order must be in 1..8, got {p}")


@dataclass(frozen=True)
class StepController:
    """Tolerance, absolute step limits, and the relative ratio clamp."""

    p: int
    tol: float
    tau_min: float = 1e-12
    tau_max: float = math.inf
    ell: float = field(default=0.0)

    def __post_init__(self):
        if self.ell == 0.0:
            object.__setattr__(self, "ell", ratio_clamp(self.p))
        elif abs(self.ell - ratio_clamp(self.p)) > 1e-12:
            raise ValueError(f"ell must follow the clamp rule; expected {ratio_clamp(self.p)}")
        if not self.ell > 1.0:
            raise ValueError("ell must exceed 1")
        if not self.tau_min < self.tau_max:
            raise ValueError("tau_min must be below tau_max")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def next_step(tau_n: float, e_n: float, ctl: StepController) -> float:
    """Controller update: rescale by (tol/e)^(1/(p+2)), then clamp.

    A zero error estimate maps to the upper relative clamp.
    """
    if tau_n <= 0:
        raise ValueError("tau_n must be positive")
    if e_n < 0:
        raise ValueError("e_n must be nonnegative")
    if e_n == 0.0:
        tau = tau_n * ctl.ell
    else:
        tau = tau_n * (ctl.tol / e_n) ** (1.0 / (ctl.p + 2))
        tau = min(max(tau, tau_n / ctl.ell), tau_n * ctl.ell)
    return min(max(tau, ctl.tau_min), ctl.tau_max)


def _history_gaps(p: int, mode: str) -> list:
    """Window gap sizes, newest gap first, per the bound-table construction."""
    if mode == "first-step":
        return [1.0] * (p - 1)
    if mode == "steady":
        rho = p ** (1.0 / (p * (p - 1)))
        return [rho**j for j in range(p - 1)]
    raise ValueError(f"unknown mode {mode!r}")


def _has_admissible_root(p: int, gaps: list, ratio: float) -> bool:
    tau_n = ratio * (gaps[0] if gaps else 1.0)
    r = [0.0]
    acc = 0.0
    for j in range(2, p + 1):
        acc += gaps[j - 2]
        r.append(acc / tau_n)
    try:
        solve_alpha1(tuple(r))
        return True
    except NoAdmissibleRoot:
        return False


def min_ratio(p: int, mode: str = "first-step") -> float:
    """Smallest step ratio keeping a positive-real-part sub-step root.

    first-step: uniform history; steady: geometrically pre-contracted
    history with each prior ratio at the mode's own bound. Bisection to
    1e-4 on the transition.
    """
    if not 2 <= p <= 8:
        raise ValueError(f"base order must be in 2..8, got {p}")
    gaps = _history_gaps(p, mode)
    lo, hi = 1e-3, 1.5
    if not _has_admissible_root(p, gaps, hi):
        raise NoAdmissibleRoot(f"no admissible root even at ratio {hi}")
    if _has_admissible_root(p, gaps, lo):
        return lo
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if _has_admissible_root(p, gaps, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class TrajectoryRecord:
    """Accepted steps of one adaptive run."""

    times: list
    states: list
    error_estimates: list
    alpha1s: list
    taus: list
    exact_errors: Optional[list] = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            cols = "n,t_n,tau_n,re_alpha1,im_alpha1,err_estimate"
            if self.exact_errors is not None:
                cols += ",err_exact"
            fh.write(cols + "\n")
            for i in range(len(self.times)):
                row = (
                    f"{i},{self.times[i]:.16e},{self.taus[i]:.16e},"
                    f"{self.alpha1s[i].real:.16e},{self.alpha1s[i].imag:.16e},"
                    f"{self.error_estimates[i]:.16e}"
                )
                if self.exact_errors is not None:
                    row += f",{self.exact_errors[i]:.16e}"
                fh.write(row + "\n")


def adaptive_drive(
    problem: ODEProblem,
    p: int,
    tau0: float,
    ctl: StepController,
    t_end: Optional[float] = None,
    clamps: bool = True,
    bootstrap_policy: str = "exact",
    solve_cfg: ImplicitSolveConfig = ImplicitSolveConfig(tol=1e-13, max_iterations=200),
    max_steps: int = 500000,
) -> TrajectoryRecord:
    """March the composed flow with error-controlled steps until t_end.

    With ``clamps`` the consecutive-step ratio stays inside [1/ell, ell]
    and the run lands exactly on t_end whenever the shortened final step
    stays within the clamp (otherwise it overshoots slightly). Without
    clamps the controller is the raw rescale rule (growth capped at x10
    when the estimate is zero), which can demand an inadmissible ratio and
    raise NoAdmissibleRoot.
    """
    t_end = problem.t_end if t_end is None else float(t_end)
    window = bootstrap(problem, p, tau0, policy=bootstrap_policy)
    tau = float(tau0)
    rec = TrajectoryRecord([], [], [], [], [], [] if problem.exact is not None else None)
    prev_a1 = None
    t = window.times[-1].real
    for _ in range(max_steps):
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            return rec
        window, out = composed_step(problem.rhs, window, tau, solve_cfg, prev_alpha1=prev_a1)
        prev_a1 = out.setup.alpha1
        t = window.times[-1].real
        rec.times.append(t)
        rec.states.append(out.y_real.copy())
        rec.error_estimates.append(out.error_estimate)
        rec.alpha1s.append(out.setup.alpha1)
        rec.taus.append(tau)
        if rec.exact_errors is not None:
            rec.exact_errors.append(float(np.max(np.abs(problem.exact(t) - out.y_real))))
        e_n = out.error_estimate
        if clamps:
            tau_next = next_step(tau, e_n, ctl)
            remaining = t_end - t
            # land exactly on t_end only when the shortened step keeps the
            # consecutive ratio admissible; otherwise overshoot slightly
            if ctl.tau_min < remaining < tau_next and remaining >= tau / ctl.ell:
                tau_next = remaining
        else:
            if e_n == 0.0:
                tau_next = tau * 10.0
            else:
                tau_next = tau * (ctl.tol / e_n) ** (1.0 / (ctl.p + 2))
            tau_next = max(tau_next, ctl.tau_min)
        tau = tau_next
    raise RuntimeError(f"exceeded {max_steps} steps before reaching t_end")
