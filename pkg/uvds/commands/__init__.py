from uvds.commands.ablate import AblateCommand
from uvds.commands.cross_validate import CrossValidateCommand
from uvds.commands.diag_variance import DiagVarianceCommand
from uvds.commands.evaluate import EvaluateCommand
from uvds.commands.gen_synthetic import GenSyntheticCommand
from uvds.commands.synth import SynthCommand
from uvds.commands.train import TrainCommand

COMMANDS = {
    "gen-synthetic": GenSyntheticCommand,
    "train": TrainCommand,
    "synth": SynthCommand,
    "eval": EvaluateCommand,
    "cv": CrossValidateCommand,
    "ablate": AblateCommand,
    "diag-variance": DiagVarianceCommand,
}
