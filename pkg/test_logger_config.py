# -*- coding: utf-8 -*-
"""日志配置"""
import logging
from pathlib import Path

import pytest

from config import reload_config
from logger_config import ROOT_LOGGER, get_logger, log_duration, setup_logging


@pytest.fixture
def restore_logging(monkeypatch):
    yield monkeypatch
    monkeypatch.undo()
    reload_config()
    setup_logging()


def test_level_override(restore_logging):
    logger = setup_logging('debug')
    assert logger.name == ROOT_LOGGER
    assert logging.getLogger().level == logging.DEBUG
    setup_logging()
    assert logging.getLogger().level == logging.getLevelName(reload_config().log.level.upper())


def test_unknown_level(restore_logging):
    with pytest.raises(ValueError):
        setup_logging('LOUD')


def test_file_output(restore_logging, tmp_path):
    restore_logging.setenv('LOG_FILE_OUTPUT', 'true')
    restore_logging.setenv('LOG_DIR', str(tmp_path / 'logs'))
    config = reload_config()
    setup_logging()
    get_logger('anisofem.test').warning('写入文件')
    for handler in logging.getLogger().handlers:
        handler.flush()
    path = Path(config.log.get_log_file_path())
    assert path.parent == tmp_path / 'logs'
    assert '写入文件' in path.read_text(encoding='utf-8')


def test_log_duration(caplog):
    logger = get_logger('anisofem.timing')
    with caplog.at_level(logging.INFO, logger='anisofem.timing'):
        with log_duration(logger, 'table2'):
            pass
    assert caplog.records[-1].getMessage().startswith('table2 完成，用时 ')


def test_log_duration_skips_failed_block(caplog):
    logger = get_logger('anisofem.timing')
    with caplog.at_level(logging.INFO, logger='anisofem.timing'):
        with pytest.raises(RuntimeError):
            with log_duration(logger, 'broken'):
                raise RuntimeError('x')
    assert not any('broken' in r.getMessage() for r in caplog.records)


def test_get_logger_default_name():
    assert get_logger().name == ROOT_LOGGER
    assert get_logger('mesh1d').name == 'mesh1d'
