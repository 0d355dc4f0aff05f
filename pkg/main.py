import logging
import sys
from typing import Callable, Dict, Optional, Type

import click
import sympy
from pydantic import BaseModel, ValidationError

from app.checks import run_checks
from app.exceptions import (BudgetExceededError, DegenerateQuotientError, ExplicitModuleRequiredError,
                            GammaOracleError, HypothesisViolationError, InterpolationError, InvariantCheckFailed,
                            NonPolynomialResultError, NotSemistableError, QmodError, RigidityNotAssertedError,
                            UnsupportedEngineError, WeightFitError)
from app.schemas import (CensusResponse, CheckResponse, CountResponse, DimsResponse, EulerResponse,
                         MotiveResponse, PoincareResponse, SemistableResponse, SIEvalResponse,
                         SlopeResponse)
from app.services import ModuliService
from config import settings

# --- Exit codes ---

EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_UNSUPPORTED = 3
EXIT_BUDGET = 4

EXIT_CODES: Dict[Type[QmodError], int] = {
    ExplicitModuleRequiredError: EXIT_ASSUMPTION,
    RigidityNotAssertedError: EXIT_ASSUMPTION,
    GammaOracleError: EXIT_ASSUMPTION,
    NotSemistableError: EXIT_ASSUMPTION,
    HypothesisViolationError: EXIT_ASSUMPTION,
    NonPolynomialResultError: EXIT_ASSUMPTION,
    InterpolationError: EXIT_ASSUMPTION,
    WeightFitError: EXIT_ASSUMPTION,
    DegenerateQuotientError: EXIT_ASSUMPTION,
    InvariantCheckFailed: EXIT_ASSUMPTION,
    UnsupportedEngineError: EXIT_UNSUPPORTED,
    BudgetExceededError: EXIT_BUDGET,
}

def exit_code_for(error: QmodError) -> int:
    for cls in type(error).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return EXIT_USAGE

class QmodGroup(click.Group):
    """
    Runs a command and turns engine failures into exit codes. Messages go
    to stderr, results to stdout.
    """
    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
            code = result if isinstance(result, int) else 0
        except click.ClickException as e:
            e.show()
            code = EXIT_USAGE if isinstance(e, click.UsageError) else e.exit_code
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_USAGE
        except ValidationError as e:
            click.echo(f"Error: invalid config: {e}", err=True)
            code = EXIT_USAGE
        except QmodError as e:
            click.echo(f"Error: {e.detail}", err=True)
            code = exit_code_for(e)
        if standalone_mode:
            sys.exit(code)
        return code

# --- Output ---

def render_text(response: BaseModel) -> str:
    if isinstance(response, EulerResponse):
        return str(response.value)
    if isinstance(response, SlopeResponse):
        return response.slope
    if isinstance(response, DimsResponse):
        return (f"dim_rep_q: {response.dim_rep_q}\ndim_rep_full: {response.dim_rep_full}\n"
                f"dim_moduli: {response.dim_moduli}")
    if isinstance(response, SemistableResponse):
        lines = [str(response.semistable).lower()]
        if response.stable_equals_semistable is not None:
            lines.append(f"stable = semistable: {str(response.stable_equals_semistable).lower()}")
        return "\n".join(lines)
    if isinstance(response, MotiveResponse):
        return response.motive.text
    if isinstance(response, PoincareResponse):
        return response.polynomial
    if isinstance(response, CountResponse):
        return str(response.count)
    if isinstance(response, CensusResponse):
        lines = [f"{s.hn_type}: {s.count} (predicted {s.predicted}){'' if s.matches else ' MISMATCH'}"
                 for s in response.strata]
        lines.append(f"total: {response.total} (predicted {response.predicted_total})")
        return "\n".join(lines)
    if isinstance(response, CheckResponse):
        return "\n".join(f"{'SKIP' if r.skipped else 'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}"
                         for r in response.results)
    if isinstance(response, SIEvalResponse):
        lines = []
        for value in response.values:
            weights = "" if value.weights is None else " " + " ".join(f"w_{k}={w}" for k, w in value.weights.items())
            lines.append(f"{value.name}: {value.value}{weights}")
        if response.quotient is not None:
            lines.append("quotient: (" + ":".join(str(x) for x in response.quotient) + ")")
        return "\n".join(lines)
    raise TypeError(f"no text form for {type(response).__name__}")

def emit(response: BaseModel, fmt: str) -> None:
    click.echo(response.model_dump_json(indent=2) if fmt == "json" else render_text(response))

# --- Options ---

def _prime(ctx, param, value: Optional[int]) -> Optional[int]:
    if value is not None and not sympy.isprime(value):
        raise click.BadParameter(f"{value} is not a prime")
    return value

def common_options() -> Callable:
    def decorate(fn: Callable) -> Callable:
        fn = click.option("--seed", type=int, default=None, help="Seed for randomized probes.")(fn)
        fn = click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
                          show_default=True, help="Output format.")(fn)
        fn = click.option("--dim", required=True, help="Dimension type s:d1,d2,... in vertex order.")(fn)
        fn = click.option("--quiver", "quiver", type=click.Path(dir_okay=False), default=None,
                          help="JSON config describing Q and T.")(fn)
        return fn
    return decorate

def service_for(quiver: Optional[str], seed: Optional[int]) -> ModuliService:
    return ModuliService.from_path(quiver, settings=settings, seed=seed)

# --- Commands ---

@click.group(cls=QmodGroup)
@click.option("-v", "--verbose", count=True, help="More log output; repeat for debug.")
def cli(verbose: int):
    """Moduli of representations of one-point extensions."""
    level = logging.getLevelName(settings.LOG_LEVEL.upper())
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=max(logging.DEBUG, level - 10 * verbose),
                        format="%(levelname)s %(name)s: %(message)s")

@cli.command()
@common_options()
@click.option("--against", default=None, help="Second argument of the form; defaults to --dim.")
def euler(quiver, dim, fmt, seed, against):
    """Euler form <a, b> of A[T]."""
    emit(service_for(quiver, seed).euler(dim, against or dim), fmt)

@cli.command()
@common_options()
def slope(quiver, dim, fmt, seed):
    """Slope s/(s+|d|)."""
    emit(service_for(quiver, seed).slope(dim), fmt)

@cli.command()
@common_options()
def dims(quiver, dim, fmt, seed):
    """Expected dimensions of Rep(Q), Rep^full and the moduli space."""
    emit(service_for(quiver, seed).dims(dim), fmt)

@cli.command("hn-types")
@common_options()
def hn_types(quiver, dim, fmt, seed):
    """HN types of weight --dim with at least two steps."""
    response = service_for(quiver, seed).hn_types(dim)
    if fmt == "json":
        emit(response, fmt)
    elif response.types:
        click.echo("\n".join(t.hn_type for t in response.types))

@cli.command()
@common_options()
@click.option("--step", "steps", multiple=True, help="One step of an HN type; repeat in order.")
def codim(quiver, dim, fmt, seed, steps):
    """Codimensions of HN strata."""
    response = service_for(quiver, seed).codim(dim, list(steps))
    if fmt == "json":
        emit(response, fmt)
    elif response.types:
        click.echo("\n".join(f"{t.hn_type}: {t.codim}" for t in response.types))

@cli.command()
@common_options()
def semistable(quiver, dim, fmt, seed):
    """Decide whether --dim is a semistable dimension type."""
    emit(service_for(quiver, seed).semistable(dim), fmt)

@cli.command()
@click.argument("kind", type=click.Choice(["rep-full", "sst"]))
@common_options()
@click.option("--user-table", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON table of [Rep^full] classes.")
@click.option("--interpolate", is_flag=True, help="Interpolate [Rep^full] from exact point counts.")
def motive(kind, quiver, dim, fmt, seed, user_table, interpolate):
    """Motive of Rep^full or Rep^sst."""
    emit(service_for(quiver, seed).motive(dim, kind, user_table, interpolate), fmt)

@cli.command()
@common_options()
@click.option("--user-table", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--interpolate", is_flag=True)
def poincare(quiver, dim, fmt, seed, user_table, interpolate):
    """Poincare polynomial of the moduli space, in L = t^2."""
    emit(service_for(quiver, seed).poincare(dim, user_table, interpolate), fmt)

@cli.command()
@common_options()
@click.option("--prime", type=int, required=True, callback=_prime)
def count(quiver, dim, fmt, seed, prime):
    """|Rep^full(F_p)| by exhaustive enumeration."""
    emit(service_for(quiver, seed).count(dim, prime), fmt)

@cli.command()
@common_options()
@click.option("--prime", type=int, default=2, show_default=True, callback=_prime)
@click.option("--user-table", type=click.Path(exists=True, dir_okay=False), default=None)
def census(quiver, dim, fmt, seed, prime, user_table):
    """Points of every HN stratum over F_p against the predicted classes."""
    response = service_for(quiver, seed).census(dim, prime, user_table)
    emit(response, fmt)
    if not response.passed:
        raise InvariantCheckFailed(f"census of {response.dim} over F_{prime} does not match the prediction")

@cli.command()
@click.option("--quiver", type=click.Path(dir_okay=False), required=True)
@click.option("--dim", "dims_", multiple=True, help="Dimension types for the census part.")
@click.option("--census", "with_census", is_flag=True, help="Also run the exhaustive enumerations.")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--seed", type=int, default=None)
def check(quiver, dims_, with_census, fmt, seed):
    """Run the invariant suite."""
    response = run_checks(service_for(quiver, seed), census=with_census, dims=list(dims_))
    emit(response, fmt)
    if not response.passed:
        failed = [r.name for r in response.results if not r.passed]
        raise InvariantCheckFailed(f"failed checks: {', '.join(failed)}")

@cli.command("si-eval")
@common_options()
@click.option("--prime", type=int, default=None, callback=_prime, help="Defaults to QMOD_PROBE_PRIME.")
@click.option("--weights", is_flag=True, help="Also fit the weight of every semi-invariant.")
def si_eval(quiver, dim, fmt, seed, prime, weights):
    """Evaluate semi-invariants at a seeded random point."""
    emit(service_for(quiver, seed).si_eval(dim, prime or settings.PROBE_PRIME, weights), fmt)

if __name__ == "__main__":
    cli()
