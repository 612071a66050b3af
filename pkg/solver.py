# -*- coding: utf-8 -*-
"""
线性与非线性求解

- solve_spd：对称正定稀疏系统，直接法（对称模式 SuperLU + 迭代改进）或 Jacobi 预条件共轭梯度
- damped_newton：正则化奇异问题的阻尼 Newton 迭代（残差无穷范数下降的步长减半）
"""
import time
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from assembly import (SparseSystem, dirichlet_split, singular_jacobian,
                      singular_residual)
from config import get_config
from logger_config import get_logger
from triangulation import FeSpace

log = get_logger(__name__)

# 直接法的最大迭代改进次数
MAX_REFINEMENT_STEPS = 5
# 直接法可达残差：ROUNDOFF_FACTOR · 机器精度 · (‖A‖‖x‖ + ‖b‖) / ‖b‖
ROUNDOFF_FACTOR = 1e3


class SolverError(RuntimeError):
    """求解器错误基类"""


class NotSPDError(SolverError):
    """矩阵不是对称正定（非正主元或 CG 失效）"""


class ConvergenceError(SolverError):
    """迭代未收敛，携带最后一次迭代值"""

    def __init__(self, message: str, last_iterate: Optional[np.ndarray] = None,
                 report: Optional['SolveReport'] = None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.report = report


@dataclass(frozen=True)
class SolveReport:
    """求解统计"""
    iterations: int
    residual: float
    method: str
    seconds: float = 0.0
    history: Tuple[float, ...] = ()


@dataclass(frozen=True)
class NewtonParams:
    """阻尼 Newton 参数"""
    max_iter: int = 100
    step_tol: float = 1e-10
    damping_factor: float = 0.5
    min_damping: float = 2.0 ** -30
    initial_guess: str = 'interpolant'
    linear_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iter < 1 or self.step_tol <= 0 or self.min_damping <= 0 or self.linear_tol <= 0:
            raise ValueError(f"Newton 参数必须为正: {self}")
        if not 0 < self.damping_factor < 1:
            raise ValueError(f"阻尼因子必须在 (0,1) 内: {self.damping_factor}")
        if self.initial_guess not in ('interpolant', 'constant'):
            raise ValueError(f"未知的初始猜测策略: {self.initial_guess}")

    @classmethod
    def from_config(cls, **overrides) -> 'NewtonParams':
        solver_config = get_config().solver
        values = dict(
            max_iter=solver_config.newton_max_iter,
            step_tol=solver_config.newton_step_tol,
            min_damping=solver_config.newton_min_damping,
            linear_tol=solver_config.linear_tol,
        )
        values.update(overrides)
        return cls(**values)


LinearInput = Union[SparseSystem, Tuple[sp.spmatrix, np.ndarray]]


def _unpack(system: LinearInput) -> Tuple[sp.csr_matrix, np.ndarray]:
    if isinstance(system, SparseSystem):
        return system.matrix, system.rhs
    matrix, rhs = system
    return sp.csr_matrix(matrix), np.asarray(rhs, dtype=float)


def _relative_residual(matrix: sp.csr_matrix, x: np.ndarray, rhs: np.ndarray) -> float:
    r_norm = np.linalg.norm(rhs - matrix @ x)
    b_norm = np.linalg.norm(rhs)
    return float(r_norm / b_norm) if b_norm > 0 else float(r_norm)


def _solve_direct(matrix: sp.csr_matrix, rhs: np.ndarray, tol: float) -> Tuple[np.ndarray, int, float]:
    lu = spla.splu(matrix.tocsc(), permc_spec='MMD_AT_PLUS_A', diag_pivot_thresh=0.0,
                   options=dict(SymmetricMode=True))
    pivots = lu.U.diagonal()
    if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(pivots <= 0):
        raise NotSPDError(f"矩阵不是对称正定: 最小主元 {pivots.min():.3e}")

    x = lu.solve(rhs)
    residual = _relative_residual(matrix, x, rhs)
    steps = 0
    while residual > tol and steps < MAX_REFINEMENT_STEPS:
        candidate = x + lu.solve(rhs - matrix @ x)
        new_residual = _relative_residual(matrix, candidate, rhs)
        steps += 1
        if new_residual >= residual:
            break
        x, residual = candidate, new_residual

    attainable = max(tol, _roundoff_floor(matrix, x, rhs))
    if residual > attainable:
        raise ConvergenceError(f"直接法迭代改进 {steps} 次后相对残差 {residual:.3e} 高于 {attainable:.1e}",
                               last_iterate=x)
    if residual > tol:
        log.debug(f"直接法相对残差 {residual:.3e} 处于舍入误差下限 {attainable:.1e} 内")
    return x, steps, residual


def _roundoff_floor(matrix: sp.csr_matrix, x: np.ndarray, rhs: np.ndarray) -> float:
    b_norm = np.linalg.norm(rhs)
    if b_norm == 0:
        return 0.0
    a_norm = spla.norm(matrix, np.inf)
    return ROUNDOFF_FACTOR * np.finfo(float).eps * (a_norm * np.linalg.norm(x) + b_norm) / b_norm


def _solve_cg(matrix: sp.csr_matrix, rhs: np.ndarray, tol: float) -> Tuple[np.ndarray, int, float]:
    n = rhs.size
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise NotSPDError("矩阵对角元非正，不是对称正定")
    inv_diag = 1.0 / diag

    b_norm = np.linalg.norm(rhs)
    x = np.zeros(n)
    if b_norm == 0:
        return x, 0, 0.0
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    max_iter = 10 * n
    k = 0
    while np.linalg.norm(r) > tol * b_norm:
        if k >= max_iter:
            raise ConvergenceError(f"共轭梯度超过迭代上限 {max_iter}", last_iterate=x)
        Ap = matrix @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise NotSPDError(f"共轭梯度失效: pᵀAp = {pAp:.3e}")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        k += 1
    return x, k, _relative_residual(matrix, x, rhs)


def solve_spd(system: LinearInput, tol: Optional[float] = None,
              method: Optional[str] = None) -> Tuple[np.ndarray, SolveReport]:
    """
    求解对称正定系统，保证相对残差 ‖Ax-b‖₂/‖b‖₂ ≤ tol（直接法受舍入误差下限约束）。

    Args:
        system: SparseSystem 或 (matrix, rhs)
        tol: 相对残差容差，默认取配置 linear_tol（1e-12）
        method: 'direct' 或 'cg'，默认取配置

    Raises:
        NotSPDError: 矩阵不是对称正定
        ConvergenceError: 直接法迭代改进后残差仍高于舍入下限，或 CG 超过迭代上限
    """
    solver_config = get_config().solver
    tol = solver_config.linear_tol if tol is None else tol
    method = method or solver_config.method
    matrix, rhs = _unpack(system)
    if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != rhs.size:
        raise ValueError(f"矩阵与右端维数不匹配: {matrix.shape}, {rhs.size}")

    start = time.perf_counter()
    if method == 'direct':
        x, iterations, residual = _solve_direct(matrix, rhs, tol)
    elif method == 'cg':
        x, iterations, residual = _solve_cg(matrix, rhs, tol)
    else:
        raise ValueError(f"未知的线性求解方法: {method}")
    report = SolveReport(iterations, residual, method, time.perf_counter() - start)
    log.debug(f"线性求解: 方法={method}, n={rhs.size}, 迭代={iterations}, 相对残差={residual:.3e}")
    return x, report


def solve_general(matrix: sp.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """一般（非对称）稀疏系统的 LU 求解"""
    return spla.splu(sp.csc_matrix(matrix)).solve(rhs)


def _initial_guess(space: FeSpace, params: NewtonParams) -> np.ndarray:
    exact = np.sqrt(space.coords[:, 0])
    if params.initial_guess == 'interpolant':
        return exact
    U = np.ones(space.n_nodes)
    U[space.boundary] = exact[space.boundary]
    return U


def damped_newton(space: FeSpace, mu: float, lumped: bool = False,
                  params: Optional[NewtonParams] = None) -> Tuple[np.ndarray, SolveReport]:
    """
    阻尼 Newton：U_{k+1} = U_k + λδ，λ 依次取 1, ½, ¼, … 中第一个使残差无穷范数下降的值；
    ‖δ‖∞ ≤ step_tol 时停止。边界值在迭代中保持不变。
    report.history 记录初值及每个接受步的残差无穷范数，严格递减。

    Returns:
        (全节点解向量, SolveReport)
    """
    if mu <= 0:
        raise ValueError(f"正则化参数 μ 必须为正: {mu}")
    params = params or NewtonParams.from_config()
    free, _ = dirichlet_split(space)
    start = time.perf_counter()

    U = _initial_guess(space, params)
    residual = singular_residual(space, U, mu, lumped)
    r_norm = float(np.abs(residual).max()) if residual.size else 0.0
    history = [r_norm]

    for k in range(1, params.max_iter + 1):
        jac = singular_jacobian(space, U, mu, lumped)
        if lumped:
            delta, _ = solve_spd((jac, -residual), tol=params.linear_tol)
        else:
            delta = solve_general(jac, -residual)
        step = float(np.abs(delta).max()) if delta.size else 0.0

        if step <= params.step_tol:
            U = U.copy()
            U[free] += delta
            final = singular_residual(space, U, mu, lumped)
            report = SolveReport(k, float(np.abs(final).max()), 'damped-newton', time.perf_counter() - start,
                                  tuple(history))
            log.debug(f"Newton 收敛: 迭代 {k} 次, 残差 {report.residual:.3e}")
            return U, report

        damping = 1.0
        while True:
            trial = U.copy()
            trial[free] += damping * delta
            trial_residual = singular_residual(space, trial, mu, lumped)
            trial_norm = float(np.abs(trial_residual).max())
            if trial_norm < r_norm:
                break
            damping *= params.damping_factor
            if damping < params.min_damping:
                report = SolveReport(k, r_norm, 'damped-newton', time.perf_counter() - start, tuple(history))
                raise ConvergenceError(f"阻尼因子下溢（第 {k} 次迭代，残差 {r_norm:.3e}）",
                                       last_iterate=U, report=report)

        U, residual, r_norm = trial, trial_residual, trial_norm
        history.append(r_norm)
        log.debug(f"Newton 第 {k} 步: λ={damping:.3g}, ‖δ‖∞={step:.3e}, ‖R‖∞={r_norm:.3e}")

    report = SolveReport(params.max_iter, r_norm, 'damped-newton', time.perf_counter() - start,
                         tuple(history))
    raise ConvergenceError(f"Newton 超过迭代上限 {params.max_iter}", last_iterate=U, report=report)
