# -*- coding: utf-8 -*-
"""日志配置：控制台 + 可选按日期命名的文件，实验单元并发时记录线程名"""
import logging
import os
import time
from contextlib import contextmanager

from config import get_config

ROOT_LOGGER = 'anisofem'


def setup_logging(level=None):
    """
    按 LogConfig 配置根日志记录器

    Args:
        level (str, optional): 覆盖配置中的日志级别，例如 'DEBUG'

    Returns:
        logging.Logger: 实验室日志记录器
    """
    log_config = get_config().log

    handlers = []
    if log_config.console_output:
        handlers.append(logging.StreamHandler())
    if log_config.file_output:
        os.makedirs(log_config.log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(log_config.get_log_file_path(), encoding=log_config.file_encoding))
    if not handlers:
        handlers.append(logging.NullHandler())

    name = (level or log_config.level).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValueError(f"未知的日志级别: {name}")

    logging.basicConfig(level=numeric, format=log_config.format, handlers=handlers, force=True)
    return logging.getLogger(ROOT_LOGGER)


def get_logger(name=None):
    """
    获取日志记录器

    Args:
        name (str, optional): 日志记录器名称，默认为调用模块名

    Returns:
        logging.Logger: 日志记录器
    """
    return logging.getLogger(name or ROOT_LOGGER)


@contextmanager
def log_duration(logger, message, level=logging.INFO):
    """代码块结束后记录 '<message> 完成，用时 x.xxs'；块内异常照常抛出，不记录耗时"""
    start = time.perf_counter()
    yield
    logger.log(level, f"{message} 完成，用时 {time.perf_counter() - start:.2f}s")
