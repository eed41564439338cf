"""
Finite-difference verification of the engine's backward rules.

The check runs on a float64 copy of the target with dropout disabled, using the
scalar objective sum(output * R) for a fixed random R. A probe whose +/- step
changes any ReLU mask or max-pool argmax straddles a kink; it is excluded and
reported rather than failed.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import ModelGraph
from .layers import Layer

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-3
RELATIVE_FLOOR = 1e-5


@dataclass
class GradCheckReport:
    tolerance: float
    max_relative_error: float = 0.0
    checked: int = 0
    excluded: int = 0
    worst: str = ""
    per_tensor: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.max_relative_error < self.tolerance

    def as_dict(self):
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "max_relative_error": self.max_relative_error,
            "checked": self.checked,
            "excluded": self.excluded,
            "worst": self.worst,
        }


def relative_error(analytic, numeric, floor=RELATIVE_FLOOR):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    target,
    x,
    tolerance=DEFAULT_TOLERANCE,
    step=DEFAULT_STEP,
    samples_per_tensor=4,
    input_samples=8,
    seed=0,
    bn_mode="train",
):
    """
    Compares analytic gradients against central differences on a seeded sample of
    coordinates from every parameter tensor and from the input.
    """
    if isinstance(target, Layer):
        target = ModelGraph.from_layer(target, in_channels=np.shape(x)[1])

    model = target.astype(np.float64)
    model.disable_dropout()
    if bn_mode == "train":
        model.train()
    else:
        model.eval()
    x = np.array(x, dtype=np.float64)

    rng = np.random.default_rng(seed)
    out = model.forward(x)
    projection = rng.standard_normal(out.shape)
    base_signature = model.kink_signature()

    model.zero_grad()
    dx = model.backward(projection)
    analytic = {key: tensor.grad.copy() for key, tensor in model.parameters().items()}
    analytic["input"] = dx

    def objective():
        value = float(np.sum(model.forward(x) * projection))
        return value, model.kink_signature()

    report = GradCheckReport(tolerance=tolerance)
    probes = [(key, tensor.values) for key, tensor in model.parameters().items()]
    probes.append(("input", x))

    for key, values in probes:
        count = input_samples if key == "input" else samples_per_tensor
        indices = rng.choice(values.size, size=min(count, values.size), replace=False)
        worst_here = 0.0
        for index in indices:
            original = values.flat[index]
            values.flat[index] = original + step
            plus, plus_signature = objective()
            values.flat[index] = original - step
            minus, minus_signature = objective()
            values.flat[index] = original

            if plus_signature != base_signature or minus_signature != base_signature:
                report.excluded += 1
                continue

            numeric = (plus - minus) / (2 * step)
            error = relative_error(float(analytic[key].flat[index]), numeric)
            report.checked += 1
            worst_here = max(worst_here, error)
            if error > report.max_relative_error:
                report.max_relative_error = error
                report.worst = f"{key}[{int(index)}]"
        report.per_tensor[key] = worst_here

    logger.info(
        "Gradient check on %s: max relative error %.3g over %d probes (%d excluded)",
        target.name,
        report.max_relative_error,
        report.checked,
        report.excluded,
    )
    return report
