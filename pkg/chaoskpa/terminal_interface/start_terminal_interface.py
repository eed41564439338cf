import argparse
import logging
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ..core.utils.errors import KpaError, UsageError
from .profiles.profiles import apply_overrides, default_profiles_names, profile
from .utils.display_markdown_message import display_markdown_message

COMMANDS = {
    "genpairs": "encrypt the dataset under the configured key and write the pair archive",
    "train": "train the decryption network on the pair archive",
    "attack": "decrypt ciphertexts with a trained checkpoint and score the result",
    "gradcheck": "verify the engine's gradients on a reduced-width network",
    "audit": "plaintext-ciphertext correlation statistics of the configured cipher",
    "plot": "loss and correlation curves from metrics CSVs",
    "fetch": "download the configured dataset from the profile's mirrors",
}

arguments = [
    {
        "name": "config",
        "nickname": "c",
        "help_text": "profile name or path; bundled: "
        + ", ".join(name.removesuffix(".yaml") for name in default_profiles_names),
        "type": str,
        "default": "mnist_unet",
    },
    {
        "name": "seed",
        "help_text": "seed for initialization, shuffling and dropout",
        "type": int,
        "setting": "train.seed",
    },
    {
        "name": "out_dir",
        "help_text": "directory for the archive, metrics, checkpoints and attack output",
        "type": str,
        "setting": "paths.output_dir",
    },
    {
        "name": "data_dir",
        "help_text": "directory holding the dataset files",
        "type": str,
        "setting": "paths.data_dir",
    },
    {
        "name": "deterministic",
        "help_text": "bit-reproducible run; wall time goes to timings.csv only",
        "type": bool,
        "setting": "train.deterministic",
    },
    {
        "name": "epochs",
        "help_text": "override the number of training epochs",
        "type": int,
        "setting": "train.epochs",
    },
    {
        "name": "network",
        "help_text": "override the network architecture",
        "type": str,
        "choices": ["unet", "msednet"],
        "setting": "network",
    },
    {
        "name": "checkpoint",
        "help_text": "checkpoint to resume from (train) or to attack with (attack)",
        "type": str,
    },
    {
        "name": "inputs",
        "help_text": "attack: PGM/PPM ciphertext files; plot: metrics CSVs",
        "type": str,
        "nargs": "*",
    },
    {
        "name": "width",
        "help_text": "gradcheck: base width of the checked network",
        "type": int,
        "default": 8,
    },
    {
        "name": "verbose",
        "nickname": "v",
        "help_text": "debug logging",
        "type": bool,
    },
]


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError on a bad command line instead of exiting with code 2."""

    def error(self, message):
        raise UsageError(f"{message}\n\nRun `{self.prog} --help` for usage.")


def build_parser():
    parser = ArgumentParser(
        prog="chaoskpa",
        description="Known-plaintext attacks on chaotic image ciphers",
        epilog="\n".join(f"  {name:<10} {text}" for name, text in COMMANDS.items()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=list(COMMANDS), help="subcommand to run")

    for arg in arguments:
        nickname = arg.get("nickname")
        flags = [f"-{nickname}", f'--{arg["name"]}'] if nickname else [f'--{arg["name"]}']
        flags.append(f'--{arg["name"].replace("_", "-")}')
        flags = list(dict.fromkeys(flags))

        if arg["type"] == bool:
            parser.add_argument(
                *flags,
                dest=arg["name"],
                help=arg["help_text"],
                action="store_true",
                default=None,
            )
        else:
            parser.add_argument(
                *flags,
                dest=arg["name"],
                help=arg["help_text"],
                type=arg["type"],
                choices=arg.get("choices"),
                default=arg.get("default"),
                nargs=arg.get("nargs"),
            )
    return parser


def setup_logging(verbose=False):
    logger = logging.getLogger("chaoskpa")
    logger.handlers = [RichHandler(show_path=False, rich_tracebacks=verbose)]
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False
    return logger


def set_attributes(workbench, args):
    """Command-line values override the profile's."""
    overrides = {
        argument["setting"]: getattr(args, argument["name"])
        for argument in arguments
        if "setting" in argument
    }
    apply_overrides(workbench, overrides)
    workbench.checkpoint = args.checkpoint


def start_terminal_interface(workbench, argv=None):
    """
    Meant to be used from the command line. Parses arguments, applies the profile and
    then the flags, and runs one subcommand.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)

    profile(workbench, args.config)
    set_attributes(workbench, args)
    workbench.show_progress = True

    command = args.command
    if command == "genpairs":
        result = workbench.genpairs()
        pairs = result.pairs
        display_markdown_message(
            f"""
            > Wrote **{len(pairs)}** pairs to `{result.archive}`

            Train / test: **{len(pairs.train_indices())}** / **{len(pairs.test_indices())}**
            """
        )
        display_audit(result.audit)
    elif command == "train":
        result = workbench.train(resume=args.checkpoint)
        display_summary(workbench.config, result)
    elif command == "attack":
        result = workbench.attack(args.checkpoint, args.inputs)
        display_markdown_message(
            f"> Wrote {len(result.written)} reconstructions to `{result.output_dir}`"
        )
        if result.report is not None:
            report = result.report
            display_markdown_message(
                f"Mean correlation **{report.mean:.5f}** over {report.count} images "
                f"(min {report.min:.5f}, max {report.max:.5f}, skipped {report.skipped_count})"
            )
    elif command == "gradcheck":
        report = workbench.gradcheck(base_width=args.width)
        display_markdown_message(
            f"> Gradient check passed: max relative error **{report.max_relative_error:.3g}** "
            f"over {report.checked} probes ({report.excluded} excluded at kinks)"
        )
    elif command == "audit":
        display_audit(workbench.audit())
    elif command == "plot":
        path = workbench.plot(args.inputs or None)
        display_markdown_message(f"> Curves written to `{path}`")
    elif command == "fetch":
        paths = workbench.fetch()
        display_markdown_message(
            "> Fetched:\n\n" + "\n".join(f"- `{path}`" for path in paths)
        )


def display_audit(audit):
    message = (
        f"Plaintext-ciphertext correlation over {audit.count} images: "
        f"mean |corr| **{audit.mean_abs:.4f}**, max |corr| {audit.max_abs:.4f}"
    )
    if audit.channel_mean_abs is not None:
        message += f", inter-channel mean |corr| {audit.channel_mean_abs:.4f}"
    display_markdown_message(message)


def display_summary(config, result):
    if not result.records:
        display_markdown_message("> Nothing to train: the checkpoint already covers every epoch.")
        return
    final = result.records[-1]
    seconds = [s for _, s in result.timings]
    table = Table(title=f"{config.name}")
    for column in (
        "Scheme",
        "Network",
        "Training loss",
        "Training accuracy",
        "Testing accuracy",
        "Epochs",
        "Time/Epoch",
    ):
        table.add_column(column)
    table.add_row(
        config.cipher.scheme.value,
        config.network,
        f"{final.loss_l1:.5f}",
        f"{final.train_corr:.2%}",
        f"{final.test_corr:.2%}",
        str(final.epoch),
        f"{sum(seconds) / len(seconds):.1f}s" if seconds else "-",
    )
    Console().print(table)
    display_markdown_message(f"Metrics: `{result.metrics_path}`")


def main(argv=None):
    from chaoskpa import workbench

    try:
        start_terminal_interface(workbench, argv)
    except KpaError as e:
        display_markdown_message(f"> **Error:** {e.message}", error=True)
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        pass
