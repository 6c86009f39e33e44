# -*- coding: utf-8 -*-
"""
rbsc-kit - テスト共通設定
リポジトリ直下をパスに追加し、標準インスタンスをフィクスチャとして提供する
"""
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from generators import canonical_instance  # noqa: E402


@pytest.fixture(scope='session')
def rbsc_small():
    return canonical_instance('rbsc-small-1')


@pytest.fixture(scope='session')
def mku_small():
    return canonical_instance('mku-small-1')


@pytest.fixture(scope='session')
def mmsa4_small():
    return canonical_instance('mmsa4-small-1')


@pytest.fixture(scope='session')
def mmsa6_small():
    return canonical_instance('mmsa6-small-1')
