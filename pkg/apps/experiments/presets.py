"""
Experiment presets: which model, which step sizes and which regime check.
"""
from dataclasses import dataclass

from django.db import models

from apps.problems.families import ModelKind

# Constant-step sweeps use eta_0 times these fractions, eta_0 = mu / (4 L^2).
STEP_FRACTIONS = (1.0, 1.0 / 4.0, 1.0 / 16.0, 1.0 / 64.0)


class Preset(models.TextChoices):
    FIG1_CONSTANT = 'fig1-constant', 'OLS, constant steps'
    FIG1_DECREASING = 'fig1-decreasing', 'OLS, decreasing steps'
    FIG1_DOUBLE_INTERP = 'fig1-double-interp', 'OLS, double interpolation'
    FIG1_SIMPLE_INTERP = 'fig1-simple-interp', 'OLS, simple interpolation'
    FIG2_RIDGE = 'fig2-ridge', 'Ridge, constant steps'
    FIG2_RIDGE_DECREASING = 'fig2-ridge-decreasing', 'Ridge, decreasing steps'
    FIG2_LOGISTIC = 'fig2-logistic', 'Logistic, constant steps'
    FIG2_HUBER = 'fig2-huber', 'Huber, constant steps'
    FIG2_SVM = 'fig2-svm', 'Hinge loss, constant steps'
    CUSTOM = 'custom', 'Custom'


class StepPlan(models.TextChoices):
    SWEEP = 'sweep', 'eta_0 / 4^j, j = 0..3'
    BASE = 'base', 'eta_0'
    THEOREM_DECAY = 'theorem-decay', '2 / (mu (k + 8 kappa^2))'
    EXPLICIT = 'explicit', 'Schedule from the config'


class Regime(models.TextChoices):
    NOISE_BALL = 'noise-ball', 'Jacobian MSE proportional to eta'
    SUBLINEAR = 'sublinear', 'Jacobian MSE of order log^2(k)/k'
    DOUBLE_INTERP = 'double-interp', 'Geometric decay of both errors'
    SIMPLE_INTERP = 'simple-interp', 'Iterates converge, Jacobians plateau'
    NONE = 'none', 'No check'


@dataclass(frozen=True)
class PresetDefinition:
    kind: str
    steps: str
    regime: str


PRESETS = {
    Preset.FIG1_CONSTANT: PresetDefinition(ModelKind.OLS_STANDARD, StepPlan.SWEEP, Regime.NOISE_BALL),
    Preset.FIG1_DECREASING: PresetDefinition(ModelKind.OLS_STANDARD, StepPlan.THEOREM_DECAY, Regime.SUBLINEAR),
    Preset.FIG1_DOUBLE_INTERP: PresetDefinition(ModelKind.OLS_DOUBLE_INTERP, StepPlan.BASE, Regime.DOUBLE_INTERP),
    Preset.FIG1_SIMPLE_INTERP: PresetDefinition(ModelKind.OLS_SIMPLE_INTERP, StepPlan.BASE, Regime.SIMPLE_INTERP),
    Preset.FIG2_RIDGE: PresetDefinition(ModelKind.RIDGE, StepPlan.SWEEP, Regime.NOISE_BALL),
    Preset.FIG2_RIDGE_DECREASING: PresetDefinition(ModelKind.RIDGE, StepPlan.THEOREM_DECAY, Regime.SUBLINEAR),
    Preset.FIG2_LOGISTIC: PresetDefinition(ModelKind.LOGISTIC, StepPlan.SWEEP, Regime.NOISE_BALL),
    Preset.FIG2_HUBER: PresetDefinition(ModelKind.HUBER, StepPlan.SWEEP, Regime.NONE),
    Preset.FIG2_SVM: PresetDefinition(ModelKind.HINGE, StepPlan.SWEEP, Regime.NONE),
}


def definition_for(preset, model_kind=None):
    """PresetDefinition of a preset; custom runs use their own model and schedule."""
    preset = Preset(preset)
    if preset == Preset.CUSTOM:
        return PresetDefinition(model_kind, StepPlan.EXPLICIT, Regime.NONE)
    return PRESETS[preset]
