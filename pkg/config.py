# -*- coding: utf-8 -*-
"""
anisofem 统一配置

配置分组：
- LogConfig: 日志
- SolverConfig: 线性/非线性求解器
- ExperimentDefaults: 实验运行（并发、输出目录、计时）
- VerifyConfig: 校验套件

默认值写在 dataclass 中，项目根目录的 .env 与环境变量可以覆盖（见 env.example）。
"""
import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv

load_dotenv(Path(__file__).parent / '.env')

SOLVER_METHODS = ('direct', 'cg')


@dataclass
class LogConfig:
    """日志配置"""
    level: str = 'INFO'
    format: str = '%(asctime)s - %(name)s - %(threadName)s - %(levelname)s - %(message)s'
    log_dir: str = 'logs'
    file_encoding: str = 'utf-8'
    console_output: bool = True
    file_output: bool = False

    def get_log_file_path(self) -> str:
        return os.path.join(self.log_dir, f'anisofem_{datetime.now().strftime("%Y%m%d")}.log')


@dataclass
class SolverConfig:
    """求解器配置"""
    linear_tol: float = 1e-12
    method: str = 'direct'
    newton_max_iter: int = 100
    newton_step_tol: float = 1e-10
    newton_min_damping: float = 2.0 ** -30


@dataclass
class ExperimentDefaults:
    """实验运行配置"""
    threads: int = min(os.cpu_count() or 1, 4)
    output_dir: str = 'results'
    timing: bool = False
    # 载荷向量求积阶为 2r + load_quadrature_extra
    load_quadrature_extra: int = 4


@dataclass
class VerifyConfig:
    """校验套件配置"""
    tolerance_scale: float = 1.0


def _env_bool(value: str) -> bool:
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


# 环境变量 -> (配置分组, 字段, 解析函数)
ENV_OVERRIDES = {
    'LOG_LEVEL': ('log', 'level', str),
    'LOG_DIR': ('log', 'log_dir', str),
    'LOG_FILE_OUTPUT': ('log', 'file_output', _env_bool),
    'ANISOFEM_LINEAR_TOL': ('solver', 'linear_tol', float),
    'ANISOFEM_SOLVER_METHOD': ('solver', 'method', str.lower),
    'ANISOFEM_NEWTON_MAX_ITER': ('solver', 'newton_max_iter', int),
    'ANISOFEM_THREADS': ('experiment', 'threads', int),
    'ANISOFEM_OUTPUT_DIR': ('experiment', 'output_dir', str),
    'ANISOFEM_TIMING': ('experiment', 'timing', _env_bool),
    'ANISOFEM_TOL_SCALE': ('verify', 'tolerance_scale', float),
}


class Config:
    """主配置类"""

    def __init__(self):
        self.log = LogConfig()
        self.solver = SolverConfig()
        self.experiment = ExperimentDefaults()
        self.verify = VerifyConfig()

        self._load_from_env()

    def _load_from_env(self):
        """环境变量覆盖默认值；无法解析的值抛 ValueError 并指明变量名"""
        for name, (section, attribute, parse) in ENV_OVERRIDES.items():
            raw = os.getenv(name)
            if not raw:
                continue
            try:
                value = parse(raw.strip())
            except ValueError as e:
                raise ValueError(f"环境变量 {name}={raw!r} 无法解析: {e}") from e
            setattr(getattr(self, section), attribute, value)

    def validate_config(self) -> bool:
        """验证配置的有效性"""
        if self.experiment.threads < 1:
            raise ValueError(f"并发线程数必须 ≥ 1: {self.experiment.threads}")
        if self.solver.linear_tol <= 0:
            raise ValueError(f"线性求解容差必须为正: {self.solver.linear_tol}")
        if self.solver.method not in SOLVER_METHODS:
            raise ValueError(f"未知的线性求解方法: {self.solver.method}，可选 {SOLVER_METHODS}")
        if self.solver.newton_max_iter < 1 or self.solver.newton_step_tol <= 0:
            raise ValueError("Newton 迭代参数必须为正")
        if self.verify.tolerance_scale < 0:
            raise ValueError(f"容差系数不能为负: {self.verify.tolerance_scale}")

        if self.log.file_output:
            os.makedirs(self.log.log_dir, exist_ok=True)

        return True


# 全局配置实例
_config = None


def get_config() -> Config:
    global _config
    if _config is None:
        _config = Config()
    return _config


def reload_config() -> Config:
    """丢弃缓存的实例并重新读取环境变量"""
    global _config
    _config = None
    return get_config()
