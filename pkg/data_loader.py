# -*- coding: utf-8 -*-
"""
rbsc-kit - 設定・ベンチスイート読み込みモジュール
config.json の安全な読み込み（既定値へのフォールバック）とベンチスイートの検証
"""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import orjson

from errors import InvalidParameter, ParseError

logger = logging.getLogger(__name__)

PROJECT_DIR = Path(__file__).resolve().parent

DEFAULT_CONFIG: Dict[str, Any] = {
    "lp": {
        "tolerance": 1e-7,
        "max_iterations": 50000,
        "degeneracy_threshold": 50,
        "backend": "auto",
        "auto_threshold": 400000,
    },
    "rbsc": {"accept_constant": 8.0, "n0_scale": 0.01, "partial_trials": 200},
    "mmsa4": {"accept_constant": 16.0, "epsilon": 1 / 3, "trial_cap": 100, "monte_carlo_trials": 10000},
    "mmsa_t": {"cut_factor": 10, "accept_constant": 16.0, "a_overrides": {}},
    "reduction": {"trials": 2000},
    "generators": {"gap_max_reseeds": 100},
    "oracles": {"rbsc_sets": 24, "mmsa_variables": 24, "mku_combinations": 1000000},
    "bench": {"jobs": None},
    "logging": {"level": "INFO", "file": "logs/rbsc_kit.log"},
}

SUITE_KINDS = ('canonical', 'rbsc', 'planted', 'mku', 'mmsa', 'gap', 'file')


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """セクション単位で既定値に上書きする"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def validate_file_path(file_path: Union[str, Path], base_dir: Optional[Union[str, Path]] = None) -> Path:
    """
    ファイルパスの検証（base_dir 指定時はその配下に限る）

    Raises:
        InvalidParameter: パスが許可されたディレクトリ外
    """
    path = Path(file_path).resolve()
    if base_dir is not None and not path.is_relative_to(Path(base_dir).resolve()):
        raise InvalidParameter(f"path {path} is outside {base_dir}")
    return path


class SafeDataLoader:
    """安全なデータ読み込みクラス"""

    def safe_load_json(self, file_path: Union[str, Path]) -> Optional[Dict[str, Any]]:
        """JSON読み込み（見つからない・壊れている場合は None）"""
        if not os.path.exists(file_path):
            logger.warning(f"file not found: {file_path}")
            return None
        try:
            with open(file_path, 'rb') as f:
                data = orjson.loads(f.read())
        except orjson.JSONDecodeError as e:
            logger.warning(f"broken JSON in {file_path}: {e}")
            return None
        if not isinstance(data, dict):
            logger.warning(f"{file_path}: top level is not an object")
            return None
        logger.debug(f"loaded {file_path}")
        return data

    def safe_load_config(self, config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """設定ファイル読み込み（失敗時は既定値）"""
        path = Path(config_path) if config_path else PROJECT_DIR / 'config.json'
        config = self.safe_load_json(path)
        if config is None:
            logger.warning("using built-in default configuration")
            return copy.deepcopy(DEFAULT_CONFIG)
        return _merge(DEFAULT_CONFIG, config)


def load_config(path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
    """config.json を読み込む（既定値に重ねる）"""
    return SafeDataLoader().safe_load_config(path)


def load_suite(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """
    ベンチスイートファイルを読み込む

    形式: {"instances": [{"name": ..., "kind": "canonical"|"rbsc"|..., "params": {...}, "solver": ...}, ...]}

    Raises:
        ParseError: 形式が不正
    """
    resolved = validate_file_path(path)
    try:
        data = orjson.loads(resolved.read_bytes())
    except FileNotFoundError as e:
        raise ParseError(f"suite file not found: {resolved}") from e
    except orjson.JSONDecodeError as e:
        raise ParseError(f"suite file is not valid JSON: {e}") from e
    if not isinstance(data, dict) or not isinstance(data.get('instances'), list):
        raise ParseError("suite file needs an 'instances' list", field='instances')
    entries = data['instances']
    for idx, entry in enumerate(entries):
        if not isinstance(entry, dict) or 'name' not in entry:
            raise ParseError(f"suite entry {idx} needs a 'name'", field=f'instances[{idx}]')
        kind = entry.get('kind', 'canonical')
        if kind not in SUITE_KINDS:
            raise ParseError(f"suite entry {entry['name']!r}: unknown kind {kind!r}",
                             field=f'instances[{idx}].kind')
    logger.info(f"loaded suite {resolved.name} with {len(entries)} instances")
    return entries


def _json_default(value: Any) -> Any:
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    """レポートを orjson で書き出す（インデント2、非文字列キー・numpy 値可）"""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    option = orjson.OPT_INDENT_2 | orjson.OPT_NON_STR_KEYS | orjson.OPT_SERIALIZE_NUMPY
    with open(out, 'wb') as f:
        f.write(orjson.dumps(data, default=_json_default, option=option))
    return out
