"""Mixed-isotope two-ion gate simulator and analysis toolkit."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import fixture_json as _fixture_json
from ._core import run_scenario_json as _run_scenario_json

__version__ = "0.3.0"


def fixture(name):
    """Reference scenario config as a dict."""
    return _json.loads(_fixture_json(name))


def run_scenario(config, seed=None, jobs=1, out_dir=None):
    """Run a scenario given as a dict or a path to a JSON file.

    Returns (summary dict, report text, exit code). Files are written only
    when out_dir is given.
    """
    if isinstance(config, dict):
        text = _json.dumps(config)
    else:
        with open(config) as fh:
            text = fh.read()
    summary, report, code = _run_scenario_json(text, seed, jobs, out_dir)
    return _json.loads(summary), report, code
