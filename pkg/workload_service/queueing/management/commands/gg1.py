import csv
import io
import logging
import math

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework.renderers import JSONRenderer

from queueing.exceptions import InvalidModel, QueueingError, Unsupported
from queueing.gated_mm1 import GatedModel, gated_idle, gated_mean, gated_tail
from queueing.model_files import load_model, model_path
from queueing.oracles import gated_markov, lindley_simulate, takacs_md1_tail
from queueing.reproduce import TABLES, format_value, reproduce
from queueing.spectral import (
    build_expansion,
    cumulants,
    idle_probability,
    moments_from_cumulants,
    moments_spectral,
    solve_model,
    tail_probability,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID = [0.25 * i for i in range(10)]


def _split(value):
    value = complex(value)
    return value.real, value.imag


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class Command(BaseCommand):
    help = "Spectral workload analysis of G/G/1 queues: zeroes, tails, moments and reference tables"

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=None, help="random seed for the simulation oracle")
        actions = parser.add_subparsers(dest="action", required=True)

        roots = actions.add_parser("roots", help="zeroes of F in the left half-plane, lowest first")
        self._model_arguments(roots)
        roots.add_argument("--count", type=int, default=10)

        tail = actions.add_parser("tail", help="P(W > t) from the spectral expansion")
        self._model_arguments(tail)
        self._expansion_arguments(tail)
        tail.add_argument("--t", type=float, nargs="+", default=DEFAULT_GRID)

        moments = actions.add_parser("moments", help="first moments of the workload")
        self._model_arguments(moments)
        self._expansion_arguments(moments)
        moments.add_argument("--nu", type=int, nargs="+", default=[1, 2, 3])
        moments.add_argument(
            "--method",
            choices=["spectral", "telescoped", "truncated"],
            default="spectral",
            help="partial-fraction moments, or moments from (telescoped) cumulant sums",
        )
        moments.add_argument("--split", type=int, default=None, help="zeroes summed before the helper takes over")

        idle = actions.add_parser("idle", help="probability that the server is idle")
        self._model_arguments(idle)

        gated = actions.add_parser("gated", help="time-gated M/M/1 with closed-form zeroes")
        self._gated_arguments(gated)
        gated.add_argument("--t", type=float, nargs="+", default=[0.0, 1.0, 2.0])
        gated.add_argument("--terms", type=int, default=None)
        gated.add_argument("--factors", type=int, default=None)
        gated.add_argument("--mean-method", choices=["viaS", "viaR"], default="viaS")

        oracle = actions.add_parser("oracle", help="independent reference values")
        oracle.add_argument("kind", choices=["takacs", "markov", "simulate"])
        oracle.add_argument("--model", default=None)
        oracle.add_argument("--lambda", dest="lam", type=float, default=1 / 3)
        oracle.add_argument("--mu", type=float, default=4.0)
        oracle.add_argument("--t", type=float, nargs="+", default=DEFAULT_GRID)
        oracle.add_argument("--qmax", type=int, default=None)
        oracle.add_argument("--customers", type=int, default=1_000_000)
        oracle.add_argument("--shards", type=int, default=None)
        self._output_arguments(oracle)

        replay = actions.add_parser("reproduce", help="regenerate a reference table and compare")
        replay.add_argument("table", choices=sorted(TABLES))
        replay.add_argument("--telescope", type=int, default=None)
        self._output_arguments(replay)

    def _output_arguments(self, parser):
        parser.add_argument("--out", default=None, help="write rows to this file instead of stdout")
        parser.add_argument("--format", choices=["csv", "json"], default="csv")

    def _model_arguments(self, parser):
        parser.add_argument("--model", required=True, help="model file, or a name from the model directory")
        parser.add_argument("--eps", type=float, default=None)
        self._output_arguments(parser)

    def _expansion_arguments(self, parser):
        parser.add_argument("--terms", type=int, default=None)
        parser.add_argument("--telescope", type=int, default=None)

    def _gated_arguments(self, parser):
        parser.add_argument("--lambda", dest="lam", type=float, required=True)
        parser.add_argument("--mu", type=float, required=True)
        self._output_arguments(parser)

    def handle(self, *args, **options):
        action = options["action"]
        try:
            header, rows, failed = getattr(self, f"_{action}")(options)
        except (InvalidModel, Unsupported, ValueError) as exc:
            raise CommandError(str(exc), returncode=2)
        except QueueingError as exc:
            logger.error(f"{action} failed: {exc}")
            raise CommandError(str(exc), returncode=1)
        self._emit(header, rows, options)
        if failed:
            self.stderr.write(self.style.ERROR(f"{failed} of {len(rows)} checks out of tolerance"))
            raise CommandError(f"{failed} checks failed", returncode=1)
        self.stderr.write(self.style.SUCCESS(f"{action}: {len(rows)} rows"))

    def _emit(self, header, rows, options):
        if options["format"] == "json":
            records = [{key: _jsonable(value) for key, value in zip(header, row)} for row in rows]
            text = JSONRenderer().render(records).decode("utf-8") + "\n"
        else:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            text = buffer.getvalue()
        if options["out"]:
            with open(options["out"], "w", encoding="utf-8") as handle:
                handle.write(text)
            logger.info(f"wrote {len(rows)} rows to {options['out']}")
        else:
            self.stdout.write(text, ending="")

    def _load(self, options):
        return load_model(model_path(options["model"], settings.GG1_MODEL_DIR))

    def _solve(self, options, count):
        model = self._load(options)
        eps = options["eps"] if options["eps"] is not None else settings.GG1_NEWTON_EPS
        helper, ladder = solve_model(model, count=count, eps=eps, max_iter=settings.GG1_NEWTON_MAX_ITER)
        return model, helper, ladder

    def _expansion(self, options):
        terms = options["terms"] if options["terms"] is not None else settings.GG1_TAIL_TERMS
        telescope = options["telescope"] if options["telescope"] is not None else settings.GG1_TELESCOPE_TERMS
        model, helper, ladder = self._solve(options, terms + telescope)
        return helper, ladder, build_expansion(model, helper, ladder, terms=terms, telescope=telescope)

    def _roots(self, options):
        if options["count"] < 0:
            raise ValueError(f"count must be nonnegative, got {options['count']}")
        _, _, ladder = self._solve(options, options["count"])
        header = ["n", "re_u", "im_u", "re_w", "im_w", "re_z", "im_z", "newton_steps", "residual"]
        rows = [[n, "", "", "", "", *_split(root.z), "", ""] for n, root in enumerate(ladder.origin)]
        for i in range(len(ladder.z)):
            rows.append(
                [
                    ladder.n1 + i,
                    *_split(ladder.u[i]),
                    *_split(ladder.w[i]),
                    *_split(ladder.z[i]),
                    int(ladder.steps[i].sum()),
                    float(ladder.residuals[i]),
                ]
            )
        return header, rows, 0

    def _tail(self, options):
        _, _, expansion = self._expansion(options)
        rows = [[t, tail_probability(expansion, t)] for t in options["t"]]
        return ["t", "p"], rows, 0

    def _moments(self, options):
        helper, ladder, expansion = self._expansion(options)
        if options["method"] == "spectral":
            values = {nu: moments_spectral(expansion, nu) for nu in options["nu"]}
        else:
            if max(options["nu"]) > 3:
                raise ValueError("cumulant methods give moments up to order 3")
            split = options["split"] if options["split"] is not None else settings.GG1_CUMULANT_SPLIT
            telescoped = options["method"] == "telescoped"
            kappa = [cumulants(ladder, helper, helper.alpha0, j, split, telescoped) for j in (1, 2, 3)]
            moments = moments_from_cumulants(*kappa)
            values = {nu: moments[nu - 1] for nu in options["nu"]}
        return ["nu", "value"], [[nu, value] for nu, value in values.items()], 0

    def _idle(self, options):
        _, helper, ladder = self._solve(options, settings.GG1_TAIL_TERMS)
        idle = idle_probability(ladder, helper)
        return ["quantity", "value"], [["idle", idle], ["busy", 1.0 - idle]], 0

    def _gated(self, options):
        model = GatedModel(options["lam"], options["mu"])
        terms = options["terms"] if options["terms"] is not None else settings.GG1_GATED_TERMS
        factors = options["factors"] if options["factors"] is not None else settings.GG1_GATED_FACTORS
        rows = [["tail", t, gated_tail(model, t, terms, factors)] for t in options["t"]]
        rows.append(["mean", "", gated_mean(model, method=options["mean_method"])])
        rows.append(["idle", "", gated_idle(model, factors)])
        return ["quantity", "t", "value"], rows, 0

    def _oracle(self, options):
        kind = options["kind"]
        if kind == "takacs":
            rows = [[t, takacs_md1_tail(options["lam"], t), ""] for t in options["t"]]
        elif kind == "markov":
            qmax = options["qmax"] if options["qmax"] is not None else settings.GG1_MARKOV_QMAX
            result = gated_markov(
                GatedModel(options["lam"], options["mu"]),
                qmax=qmax,
                tol=settings.GG1_MARKOV_TOL,
                max_iter=settings.GG1_MARKOV_MAX_ITER,
            )
            rows = [[t, result.tail(t), ""] for t in options["t"]]
            rows.append(["mean", result.mean, ""])
        else:
            if not options["model"]:
                raise ValueError("simulate needs --model")
            model = load_model(model_path(options["model"], settings.GG1_MODEL_DIR))
            seed = options["seed"] if options["seed"] is not None else settings.GG1_SIMULATION_SEED
            shards = options["shards"] if options["shards"] is not None else settings.GG1_SIMULATION_SHARDS
            result = lindley_simulate(model, options["customers"], seed=seed, shards=shards, grid=options["t"])
            rows = [[float(t), float(p), float(se)] for t, p, se in zip(result.grid, result.tail, result.tail_se)]
            self.stderr.write(f"seed {seed}, {shards} shard(s), {options['customers']} customers")
        return ["t", "p", "standard_error"], rows, 0

    def _reproduce(self, options):
        knobs = {
            "model_dir": settings.GG1_MODEL_DIR,
            "factors": settings.GG1_GATED_FACTORS,
            "terms": settings.GG1_GATED_TERMS,
            "qmax": settings.GG1_MARKOV_QMAX,
        }
        if options["telescope"] is not None:
            knobs["telescope"] = options["telescope"]
        checks = reproduce(options["table"], **knobs)
        header = ["table", "quantity", "value", "expected", "error", "tolerance", "status", "note"]
        rows = [
            [
                c.table,
                c.quantity,
                format_value(c.value),
                format_value(c.expected),
                "" if c.skipped else f"{c.error:.3g}",
                f"{c.tolerance:g}",
                c.status,
                c.note,
            ]
            for c in checks
        ]
        return header, rows, sum(not c.passed for c in checks)
