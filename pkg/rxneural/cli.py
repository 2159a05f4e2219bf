"""
Command-line surface of the toolkit.

Every subcommand reads the experiment document, writes its artifacts into a run
directory (runs/<timestamp>-<name>/ unless --run-dir is given) and records a
manifest.json with the configuration, its hash, the seeds drawn from the
top-level seed and the git revision.
"""

from dataclasses import replace
from datetime import datetime
from typing import Any, Dict, Iterable, List, Optional, Sequence
import csv
import json
import logging
import os
import subprocess

import click
import numpy as np

from . import __version__, keyrank, sensitivity
from .attack import (
    PRESETS,
    SUCCESS_CRITERIA,
    AttackConfig,
    calibrate_thresholds,
    generate_challenge,
    run_attack,
    success_rate_harness,
    synthetic_setup,
    write_report,
)
from .config import ExperimentConfig, canonical_json, config_hash, load_config, parse_config
from .data import (
    BaseFormat,
    DataFormatSpec,
    Dataset,
    HalfRxDifference,
    NegativeMode,
    derive_seed,
    enumerate_half_rxd,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .distinguisher import (
    EvalReport,
    Model,
    ModelConfig,
    StageSpec,
    TrainSchedule,
    build_stages,
    evaluate,
    load_model,
    save_model,
    significant,
    simeck_recipe,
    simon_recipe,
    staged_train,
)
from .distinguisher import train as train_model
from .distinguisher.model import model_config_hash
from .error import ArtifactError, RxNeuralError

logger = logging.getLogger(__name__)

# Tags of the sub-seeds drawn from the top-level seed
SEED_TRAIN_DATA = 1
SEED_VAL_DATA = 2
SEED_TRAINING = 3
SEED_STAGES = 4
SEED_BST = 5
SEED_KBST = 6
SEED_WKR = 7
SEED_JWKR = 8
SEED_SWEEP = 9

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=PROJECT_ROOT,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


class RunContext:
    """
    Configuration and output directory of one invocation.

    The configuration is loaded on first use so that commands needing none
    (listing candidates, --help) run without a config file.
    """

    def __init__(self, config_path: str, workers: Optional[int] = None, run_dir: Optional[str] = None,
                 verify: bool = False):
        self.config_path = config_path
        self.verify = verify
        self.seeds: Dict[str, int] = {}
        self.outputs: List[str] = []
        self._workers = workers
        self._run_dir = run_dir
        self._cfg: Optional[ExperimentConfig] = None

    @property
    def cfg(self) -> ExperimentConfig:
        if self._cfg is None:
            raw = load_config(self.config_path)
            if self._workers is not None:
                raw["workers"] = self._workers
            self._cfg = parse_config(raw)
            logger.debug(f"Loaded configuration '{self._cfg.name}' from {self.config_path}")
        return self._cfg

    @property
    def hash(self) -> str:
        return config_hash(self.cfg)

    def hash_for(self, rounds: int) -> str:
        """Hash of the same experiment at another round count."""
        return config_hash(self.cfg.copy(update={"rounds": rounds}))

    @property
    def run_dir(self) -> str:
        if self._run_dir is None:
            stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
            self._run_dir = os.path.join(self.cfg.paths.runs_dir, f"{stamp}-{self.cfg.name}")
        os.makedirs(self._run_dir, exist_ok=True)
        return self._run_dir

    def seed(self, name: str, *tags: int) -> int:
        value = derive_seed(self.cfg.seed, *tags)
        self.seeds[name] = value
        return value

    def output(self, name: str) -> str:
        self.outputs.append(name)
        return os.path.join(self.run_dir, name)

    def check(self, path: str, found: Optional[str], expected: Optional[str] = None) -> None:
        """With --verify, fail unless the artifact was produced under the expected config hash."""
        if not self.verify:
            return
        expected = expected or self.hash
        if found != expected:
            raise ArtifactError(f"Config hash mismatch: artifact has {found or 'none'}, expected {expected}",
                                path=path)
        logger.info(f"Verified config hash of {path}")

    def write_manifest(self, command: str, **extra: Any) -> str:
        cfg = self.cfg
        manifest = {
            "command": command,
            "name": cfg.name,
            "created": datetime.now().isoformat(timespec="seconds"),
            "version": __version__,
            "git": git_describe(),
            "config_path": self.config_path,
            "config": json.loads(canonical_json(cfg)),
            "config_hash": self.hash,
            "seed": cfg.seed,
            "seeds": self.seeds,
            "workers": cfg.workers,
            "outputs": sorted(self.outputs),
            **extra,
        }
        path = os.path.join(self.run_dir, "manifest.json")
        with open(path, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        logger.info(f"Wrote {command} manifest to {path}")
        return path


pass_run = click.make_pass_decorator(RunContext)


def _half_rxd(cfg: ExperimentConfig) -> HalfRxDifference:
    return HalfRxDifference(cfg.half_rxd.lam, cfg.half_rxd.delta_r)


def _spec(cfg: ExperimentConfig, rounds: Optional[int] = None, base: Optional[BaseFormat] = None) -> DataFormatSpec:
    return DataFormatSpec(base or BaseFormat.parse(cfg.data_format.base), cfg.data_format.k, cfg.half_rxd.lam,
                          rounds or cfg.rounds)


def _schedule(cfg: ExperimentConfig, seed: int) -> TrainSchedule:
    t = cfg.training
    return TrainSchedule(t.epochs, t.batch_size, tuple(t.learning_rates), cfg.data.train_size, cfg.data.val_size,
                         seed)


def _require(value: Optional[str], option: str, key: str) -> str:
    if not value:
        raise click.UsageError(f"No {key.replace('_', ' ')} given; pass {option} or set paths.{key}")
    return value


def _parse_bits(text: Optional[str]) -> Optional[List[int]]:
    if text is None:
        return None
    return [int(b) for b in text.split(",") if b.strip()]


def _write_json(path: str, doc: Dict[str, Any]) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]], digest: str) -> None:
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash={digest}\n")
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _format_report(report: EvalReport) -> str:
    return f"accuracy={report.accuracy:.4f} tpr={report.tpr:.4f} tnr={report.tnr:.4f} n={report.n}"


def _dataset(run: RunContext, path: Optional[str], size: int, name: str, tag: int) -> Dataset:
    """Load a dataset file, or generate the one gen-data would write under this name."""
    cfg = run.cfg
    if path:
        dataset = load_dataset(path)
        run.check(path, dataset.config_hash.hex())
        return dataset
    return generate_dataset(cfg.cipher, _spec(cfg), _half_rxd(cfg), cfg.rounds, size, run.seed(name, tag),
                            NegativeMode(cfg.data.negative_mode), workers=cfg.workers)


def _model(run: RunContext, path: str, expected: Optional[str] = None) -> Model:
    model = load_model(path)
    run.check(path, model_config_hash(path), expected)
    return model


def _profile(run: RunContext, path: str, expected: Optional[str] = None):
    profile = keyrank.load_profile(path)
    run.check(path, profile.metadata.get("config_hash"), expected)
    return profile


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="rxneural")
@click.option("--config", "config_path", default="config.json", show_default=True, type=click.Path(),
              help="Experiment document")
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level")
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Worker threads; overrides the config")
@click.option("--run-dir", type=click.Path(file_okay=False), default=None,
              help="Output directory instead of runs/<timestamp>-<name>")
@click.option("--verify", is_flag=True, help="Check the config hash of every artifact read")
@click.pass_context
def cli(ctx: click.Context, config_path: str, verbose: bool, workers: Optional[int], run_dir: Optional[str],
        verify: bool) -> None:
    """Rotational-XOR neural cryptanalysis of Simon32/64 and Simeck32/64."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    ctx.obj = RunContext(config_path, workers, run_dir, verify)


@cli.command("gen-data")
@pass_run
def gen_data(run: RunContext) -> None:
    """Generate the training and validation datasets."""
    cfg = run.cfg
    digest = bytes.fromhex(run.hash)
    for name, size, tag in (("train.bin", cfg.data.train_size, SEED_TRAIN_DATA),
                            ("val.bin", cfg.data.val_size, SEED_VAL_DATA)):
        dataset = _dataset(run, None, size, name, tag)
        save_dataset(dataset, run.output(name), digest)
        click.echo(f"{name}: {len(dataset)} samples ({dataset.n_real} real, {dataset.n_random} random)")
    run.write_manifest("gen-data")


@cli.command("train")
@pass_run
def train_command(run: RunContext) -> None:
    """Train a distinguisher on paths.dataset, or on freshly generated data."""
    cfg = run.cfg
    train_set = _dataset(run, cfg.paths.dataset, cfg.data.train_size, "train.bin", SEED_TRAIN_DATA)
    val_set = _dataset(run, cfg.paths.val_dataset, cfg.data.val_size, "val.bin", SEED_VAL_DATA)
    model = Model(ModelConfig(train_set.width, tuple(cfg.model.hidden_sizes), cfg.model.seed))
    model, report = train_model(model, train_set, val_set, _schedule(cfg, run.seed("training", SEED_TRAINING)))
    save_model(model, run.output("model.json"), run.hash)
    _write_json(run.output("eval.json"), {**report.to_dict(), "valid": report.is_valid(),
                                          "significant": significant(report)})
    run.write_manifest("train")
    click.echo(_format_report(report))


def _stage_specs(cfg: ExperimentConfig, recipe: str, seed: int) -> List[StageSpec]:
    if recipe == "auto" and cfg.stages:
        return [
            StageSpec(s.rounds, TrainSchedule(s.epochs, s.batch_size,
                                              tuple(s.learning_rates or cfg.training.learning_rates),
                                              s.train_size, s.val_size, derive_seed(seed, i)),
                      skip=s.skip, label=f"stage {i + 1}")
            for i, s in enumerate(cfg.stages)
        ]
    if recipe == "auto":
        recipe = cfg.cipher
    builder = simon_recipe if recipe == "simon" else simeck_recipe
    return builder(cfg.rounds, _schedule(cfg, seed))


@cli.command("staged-train")
@click.option("--model", "model_path", type=click.Path(), default=None,
              help="Trained (r-1)-round model; paths.model by default")
@click.option("--recipe", type=click.Choice(["auto", "simon", "simeck"]), default="auto", show_default=True,
              help="Stage list; auto uses the config stages, else the cipher's recipe")
@pass_run
def staged_train_command(run: RunContext, model_path: Optional[str], recipe: str) -> None:
    """Fine-tune an (r-1)-round model into an r-round one."""
    cfg = run.cfg
    path = _require(model_path or cfg.paths.model, "--model", "model")
    base = _model(run, path, run.hash_for(cfg.rounds - 1))
    specs = _stage_specs(cfg, recipe, run.seed("stages", SEED_STAGES))
    stages = build_stages(cfg.cipher, _spec(cfg), _half_rxd(cfg), specs, run.seeds["stages"],
                          NegativeMode(cfg.data.negative_mode), cfg.workers)
    model, reports = staged_train(base, stages)
    save_model(model, run.output("model.json"), run.hash)
    executed = [s for s in specs if not s.skip]
    _write_csv(run.output("stages.csv"), ["stage", "rounds", "accuracy", "tpr", "tnr", "n"],
               [[s.label, s.rounds, r.accuracy, r.tpr, r.tnr, r.n] for s, r in zip(executed, reports)], run.hash)
    run.write_manifest("staged-train", recipe=recipe)
    for s, r in zip(executed, reports):
        click.echo(f"{s.label} ({s.rounds} rounds): {_format_report(r)}")


@cli.command("eval")
@click.option("--model", "model_path", type=click.Path(), default=None, help="Model file; paths.model by default")
@click.option("--dataset", "dataset_path", type=click.Path(), default=None,
              help="Dataset file; paths.val_dataset, else a generated validation set")
@pass_run
def eval_command(run: RunContext, model_path: Optional[str], dataset_path: Optional[str]) -> None:
    """Report accuracy, TPR and TNR of a model on a dataset."""
    cfg = run.cfg
    model = _model(run, _require(model_path or cfg.paths.model, "--model", "model"))
    dataset = _dataset(run, dataset_path or cfg.paths.val_dataset, cfg.data.val_size, "val.bin", SEED_VAL_DATA)
    report = evaluate(model, dataset)
    _write_json(run.output("eval.json"), {**report.to_dict(), "valid": report.is_valid(),
                                          "significant": significant(report)})
    run.write_manifest("eval")
    click.echo(_format_report(report))


@cli.command("sweep-rxd")
@click.option("--cipher", type=click.Choice(["simon", "simeck"]), default=None, help="Cipher; the config's by default")
@click.option("--hw", type=click.IntRange(1, 2), default=2, show_default=True, help="Maximum Hamming weight of delta_r")
@click.option("--list-only", is_flag=True, help="Print the candidates and exit")
@click.option("--sample", type=click.IntRange(min=1), default=None, help="Train on a seeded subset of N candidates")
@click.option("--formats", default="D1,D2", show_default=True, help="Data formats to train on")
@pass_run
def sweep_rxd(run: RunContext, cipher: Optional[str], hw: int, list_only: bool, sample: Optional[int],
              formats: str) -> None:
    """Train a distinguisher per half RX-difference candidate and rank them."""
    candidates = enumerate_half_rxd(hw)
    if list_only:
        for d in candidates:
            click.echo(str(d))
        return
    cfg = run.cfg
    cipher = cipher or cfg.cipher
    bases = [BaseFormat.parse(f.strip()) for f in formats.split(",") if f.strip()]
    seed = run.seed("sweep", SEED_SWEEP)
    if sample is not None:
        picked = np.random.default_rng(seed).choice(len(candidates), size=min(sample, len(candidates)), replace=False)
        candidates = [candidates[i] for i in np.sort(picked)]
    elif len(candidates) > 64:
        logger.warning(f"Sweeping all {len(candidates)} candidates; pass --sample to train on a subset")

    negative = NegativeMode(cfg.data.negative_mode)
    rows = []
    for i, d in enumerate(candidates):
        for base in bases:
            spec = DataFormatSpec(base, cfg.data_format.k, d.lam, cfg.rounds)
            tags = (i, base.number)
            train_set = generate_dataset(cipher, spec, d, cfg.rounds, cfg.data.train_size,
                                         derive_seed(seed, *tags, 0), negative, workers=cfg.workers)
            val_set = generate_dataset(cipher, spec, d, cfg.rounds, cfg.data.val_size,
                                       derive_seed(seed, *tags, 1), negative, workers=cfg.workers)
            model = Model(ModelConfig(spec.width, tuple(cfg.model.hidden_sizes), cfg.model.seed))
            _, report = train_model(model, train_set, val_set, _schedule(cfg, derive_seed(seed, *tags, 2)))
            rows.append((d, base, report))
            logger.info(f"{d} {base.name}: {_format_report(report)}")

    rows.sort(key=lambda row: -row[2].accuracy)
    _write_csv(run.output("sweep.csv"),
               ["rank", "lambda", "delta_r", "hamming_weight", "format", "accuracy", "tpr", "tnr", "valid",
                "significant"],
               [[rank, d.lam, f"{d.delta_r:#x}", bin(d.delta_r).count("1"), base.name, r.accuracy, r.tpr, r.tnr,
                 r.is_valid(), significant(r)] for rank, (d, base, r) in enumerate(rows, start=1)], run.hash)
    counts: Dict[tuple, List[int]] = {}
    for d, base, r in rows:
        tally = counts.setdefault((d.lam, bin(d.delta_r).count("1"), base.name), [0, 0])
        tally[0] += 1
        tally[1] += int(r.is_valid())
    _write_csv(run.output("sweep_counts.csv"), ["lambda", "hamming_weight", "format", "tested", "valid"],
               [[*key, *tally] for key, tally in sorted(counts.items())], run.hash)
    run.write_manifest("sweep-rxd", cipher=cipher, hw=hw, sample=sample, formats=[b.name for b in bases])
    for d, base, r in rows[:10]:
        click.echo(f"{d} {base.name}: {_format_report(r)}")


def _save_sensitivity(run: RunContext, profile: sensitivity.SensitivityProfile, name: str) -> None:
    profile.metadata["config_hash"] = run.hash
    sensitivity.save_profile(profile, run.output(f"{name}.json"))
    sensitivity.write_profile_csv(profile, run.output(f"{name}.csv"))
    bits = sensitivity.sensitive_bits(profile, run.cfg.sensitivity.threshold)
    click.echo(f"Sensitive bits (|drop| > {run.cfg.sensitivity.threshold:g}): {bits}")


@cli.command("bst")
@click.option("--model", "model_path", type=click.Path(), default=None, help="Model file; paths.model by default")
@click.option("--xor-type", type=click.Choice([t.value for t in sensitivity.XorType]), default=None,
              help="Which ciphertexts are modified; the config's by default")
@pass_run
def bst_command(run: RunContext, model_path: Optional[str], xor_type: Optional[str]) -> None:
    """Bit sensitivity test over the ciphertext bit positions."""
    cfg = run.cfg
    model = _model(run, _require(model_path or cfg.paths.model, "--model", "model"))
    s = cfg.sensitivity
    test = sensitivity.BstConfig(xor_type or s.xor_type, s.n_samples, s.bit_positions)
    profile = sensitivity.bst(model, cfg.cipher, _half_rxd(cfg), _spec(cfg), cfg.rounds, test,
                              run.seed("bst", SEED_BST), cfg.workers)
    _save_sensitivity(run, profile, "bst")
    run.write_manifest("bst", xor_type=test.xor_type.value)


@cli.command("kbst")
@click.option("--model", "model_path", type=click.Path(), default=None, help="Model file; paths.model by default")
@click.option("--target-round", type=int, default=None, help="1-based round of the tested subkey; r + 1 by default")
@pass_run
def kbst_command(run: RunContext, model_path: Optional[str], target_round: Optional[int]) -> None:
    """Key-bit sensitivity test of the subkey one round past the distinguisher."""
    cfg = run.cfg
    model = _model(run, _require(model_path or cfg.paths.model, "--model", "model"))
    s = cfg.sensitivity
    test = sensitivity.KbstConfig(s.mask_type, s.n_groups, symmetric=s.symmetric)
    profile = sensitivity.kbst(model, cfg.cipher, _half_rxd(cfg), _spec(cfg), cfg.rounds,
                               target_round or cfg.rounds + 1, test, run.seed("kbst", SEED_KBST), cfg.workers)
    _save_sensitivity(run, profile, "kbst")
    run.write_manifest("kbst", mask_type=test.mask_type.value)


@cli.command("wkr")
@click.option("--model", "model_path", type=click.Path(), default=None, help="Model file; paths.model by default")
@pass_run
def wkr_command(run: RunContext, model_path: Optional[str]) -> None:
    """Wrong key response of a distinguisher over every 16-bit subkey difference."""
    cfg = run.cfg
    model = _model(run, _require(model_path or cfg.paths.model, "--model", "model"))
    profile = keyrank.wkr_profile(model, cfg.cipher, _half_rxd(cfg), _spec(cfg), cfg.rounds,
                                  cfg.profile.samples_per_delta, run.seed("wkr", SEED_WKR), cfg.workers)
    profile.metadata["config_hash"] = run.hash
    keyrank.save_profile(profile, run.output("wkr.bin"))
    keyrank.write_profile_csv(profile, run.output("wkr.csv"))
    run.write_manifest("wkr")
    top = np.argsort(profile.mu, kind="stable")[::-1][:5]
    click.echo("Highest responses: " + ", ".join(f"{int(d):#06x}={profile.mu[d]:.4f}" for d in top))


@cli.command("jwkr")
@click.option("--model", "model_path", type=click.Path(), default=None, help="Model file; paths.model by default")
@click.option("--sens-a", default=None, help="Comma-separated sensitive bits of rk; profile.sens_a by default")
@click.option("--sens-b", default=None, help="Comma-separated sensitive bits of rk'; profile.sens_b by default")
@click.option("--from-kbst", type=click.Path(), default=None,
              help="Take both sets from a symmetric KBST profile instead")
@click.option("--keep-insensitive", is_flag=True, help="Keep the true insensitive subkey bits in every cell")
@pass_run
def jwkr_command(run: RunContext, model_path: Optional[str], sens_a: Optional[str], sens_b: Optional[str],
                 from_kbst: Optional[str], keep_insensitive: bool) -> None:
    """Joint wrong key response over the sensitive bits of both subkeys."""
    cfg = run.cfg
    model = _model(run, _require(model_path or cfg.paths.model, "--model", "model"))
    if from_kbst:
        kbst_profile = sensitivity.load_profile(from_kbst)
        run.check(from_kbst, kbst_profile.metadata.get("config_hash"))
        bits_a = bits_b = sensitivity.sensitive_bits(kbst_profile, cfg.sensitivity.threshold)
    else:
        bits_a = _parse_bits(sens_a) if sens_a is not None else cfg.profile.sens_a
        bits_b = _parse_bits(sens_b) if sens_b is not None else cfg.profile.sens_b
    if not bits_a or not bits_b:
        raise click.UsageError("Both sensitive bit sets must be non-empty")
    profile = keyrank.jwkr_profile(model, cfg.cipher, _half_rxd(cfg), _spec(cfg), cfg.rounds, bits_a, bits_b,
                                   cfg.profile.samples_per_cell, run.seed("jwkr", SEED_JWKR), cfg.workers,
                                   zero_insensitive=not keep_insensitive)
    profile.metadata["config_hash"] = run.hash
    keyrank.save_profile(profile, run.output("jwkr.bin"))
    keyrank.write_profile_csv(profile, run.output("jwkr.csv"))
    run.write_manifest("jwkr", sens_a=list(profile.sens_a), sens_b=list(profile.sens_b))
    click.echo(f"JWKR over {profile.space_bits} bits: sens_a={list(profile.sens_a)} sens_b={list(profile.sens_b)}")


def _attack_setup(run: RunContext, preset: Optional[str], synthetic: bool, calibration_trials: int,
                  paths: Dict[str, Optional[str]]):
    """Attack parameters, distinguishers and profiles, with thresholds calibrated when unset."""
    cfg = run.cfg
    if preset:
        acfg = AttackConfig.from_preset(preset, seed=cfg.seed, workers=cfg.workers, c1=cfg.attack.c1,
                                        c2=cfg.attack.c2)
    else:
        acfg = AttackConfig.from_experiment(cfg)
    if acfg.long_running:
        logger.warning(f"Attacking {acfg.total_rounds} rounds with m={acfg.m}, t={acfg.t} is a long-running job")
    if synthetic:
        if not acfg.spec.base.carries_ciphertexts:
            logger.info(f"Synthetic scorers read ciphertexts; using D2 instead of {acfg.spec.base.name}")
            acfg = replace(acfg, spec=replace(acfg.spec, base=BaseFormat.D2))
        models, profiles = synthetic_setup(acfg)
    else:
        r = acfg.total_rounds - 1
        models = (_model(run, _require(paths["model"] or cfg.paths.model, "--model-r", "model"), run.hash_for(r)),
                  _model(run, _require(paths["model_r_minus_1"] or cfg.paths.model_r_minus_1,
                                       "--model-r-minus-1", "model_r_minus_1"), run.hash_for(r - 1)))
        profiles = (_profile(run, _require(paths["profile"] or cfg.paths.profile, "--profile-r", "profile"),
                             run.hash_for(r)),
                    _profile(run, _require(paths["profile_r_minus_1"] or cfg.paths.profile_r_minus_1,
                                           "--profile-r-minus-1", "profile_r_minus_1"), run.hash_for(r - 1)))
    if acfg.c1 is None or acfg.c2 is None:
        c1, c2 = calibrate_thresholds(acfg, models, calibration_trials, cfg.attack.quantile)
        acfg = acfg.with_thresholds(acfg.c1 if acfg.c1 is not None else c1, acfg.c2 if acfg.c2 is not None else c2)
    return acfg, models, profiles


def _attack_options(fn):
    options = [
        click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
                     help="Named parameter set; attack.preset by default"),
        click.option("--synthetic", is_flag=True, help="Use structure oracles and their exact profiles"),
        click.option("--calibration-trials", type=click.IntRange(min=1), default=8, show_default=True,
                     help="Challenges scored when c1 or c2 is unset"),
        click.option("--model-r", type=click.Path(), default=None, help="r-round model; paths.model by default"),
        click.option("--model-r-minus-1", type=click.Path(), default=None, help="(r-1)-round model"),
        click.option("--profile-r", type=click.Path(), default=None, help="Profile of the r-round model"),
        click.option("--profile-r-minus-1", type=click.Path(), default=None, help="Profile of the (r-1)-round model"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@cli.command("attack")
@_attack_options
@pass_run
def attack_command(run: RunContext, preset: Optional[str], synthetic: bool, calibration_trials: int,
                   model_r: Optional[str], model_r_minus_1: Optional[str], profile_r: Optional[str],
                   profile_r_minus_1: Optional[str]) -> None:
    """Recover the last two subkeys from a freshly encrypted challenge."""
    acfg, models, profiles = _attack_setup(run, preset or run.cfg.attack.preset, synthetic, calibration_trials, {
        "model": model_r, "model_r_minus_1": model_r_minus_1,
        "profile": profile_r, "profile_r_minus_1": profile_r_minus_1,
    })
    challenge = generate_challenge(acfg, acfg.seed)
    first, second = models(challenge) if callable(models) else models
    result = run_attack(acfg, first, second, profiles, challenge).copy(update={"config_hash": run.hash})
    write_report(result, run.output("attack.json"), timings=False)
    run.write_manifest("attack", synthetic=synthetic, thresholds={"c1": acfg.c1, "c2": acfg.c2},
                       wall_time=result.wall_time)
    click.echo(result.summary())


@cli.command("harness")
@_attack_options
@click.option("--n-attacks", type=click.IntRange(min=1), default=None, help="Attacks to run; attack.trials by default")
@click.option("--success-on", type=click.Choice(SUCCESS_CRITERIA), default=None,
              help="Success criterion; attack.success_on by default")
@pass_run
def harness_command(run: RunContext, preset: Optional[str], synthetic: bool, calibration_trials: int,
                    model_r: Optional[str], model_r_minus_1: Optional[str], profile_r: Optional[str],
                    profile_r_minus_1: Optional[str], n_attacks: Optional[int], success_on: Optional[str]) -> None:
    """Success rate of independent attacks under fresh master keys."""
    cfg = run.cfg
    acfg, models, profiles = _attack_setup(run, preset or cfg.attack.preset, synthetic, calibration_trials, {
        "model": model_r, "model_r_minus_1": model_r_minus_1,
        "profile": profile_r, "profile_r_minus_1": profile_r_minus_1,
    })
    report = success_rate_harness(acfg, models, profiles, n_attacks or cfg.attack.trials, cfg.workers,
                                  success_on or cfg.attack.success_on, log_path=run.output("trials.jsonl"),
                                  config_hash=run.hash)
    write_report(report, run.output("harness.json"), timings=False)
    run.write_manifest("harness", synthetic=synthetic, thresholds={"c1": acfg.c1, "c2": acfg.c2})
    click.echo(f"Success rate {report.rate:.2%} ({report.successes}/{report.n_attacks}, "
               f"criterion '{report.success_on}')")


def _one_line(e: BaseException) -> str:
    text = str(e).strip()
    return text.splitlines()[0] if text else e.__class__.__name__


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name; sys.argv[1:] when omitted

    Returns:
        Process exit code; failures print one line to standard error
    """
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="rxneural", standalone_mode=False)
    except click.ClickException as e:
        click.echo(f"Error: {e.format_message()}", err=True)
        return e.exit_code
    except click.Abort:
        click.echo("Error: aborted", err=True)
        return 1
    except (RxNeuralError, OSError, ValueError) as e:
        logger.debug("Command failed", exc_info=True)
        click.echo(f"Error: {_one_line(e)}", err=True)
        return 1
    return rv if isinstance(rv, int) else 0
