# Copyright (C) 2026 The kdyn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Knowledge-ecosystem dynamics: simulation, regime classification and calibration."""

import json

from ._core import (
    DomainError,
    Error,
    IoError,
    NumericalError,
    ValidationError,
    fit,
    preset_names,
    run_cli,
    simulate_csv,
    step_K_exact,
)

__all__ = [
    "DomainError",
    "Error",
    "IoError",
    "NumericalError",
    "ValidationError",
    "fit",
    "presets",
    "preset_names",
    "run_cli",
    "simulate",
    "simulate_csv",
    "step_K_exact",
]


def presets():
    """Built-in presets with labels, parameters, initial states and horizons."""
    from ._core import presets_json

    return json.loads(presets_json())["presets"]


def simulate(preset="healthy_growth", params=None, y0=None, t_end=None):
    """Runs one scenario through the same path as the HTTP service.

    Raises ValidationError for rejected inputs and NumericalError when integration fails.
    """
    from ._core import simulate_json

    request = {"preset": preset}
    if params:
        request["params"] = dict(params)
    if y0:
        request["y0"] = dict(y0)
    if t_end is not None:
        request["t_end"] = t_end
    status, body = simulate_json(json.dumps(request))
    doc = json.loads(body)
    if status == 400:
        raise ValidationError(f"{doc.get('field', '')}: {doc['detail']}")
    if status != 200:
        raise NumericalError(doc["detail"])
    return doc
