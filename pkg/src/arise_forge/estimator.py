"""scikit-learn style facade over the pipeline.

``fit`` learns an instruction-set extension from one program (and
optionally its trace); ``transform`` rewrites a program with it; ``score``
reports the oracle-measured saving for the configured target in percent.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import emitter, oracle, pipeline
from .validation import check_program, check_trace


class ExtensionEstimator(TransformerMixin, BaseEstimator):
    """Generate and select fused custom instructions.

    Parameters mirror the CLI flags. After ``fit``:

    candidates_ : all generated patterns, in deterministic order
    selected_   : ``[(pattern, improvement)]`` ranked by improvement
    layouts_    : one EncodingLayout per selected pattern
    recount_    : oracle totals on the training program
    """

    def __init__(self, target="static-size", opcode_bits=9, liveness="strict", include_m_ext=False,
                 start_mode="greedy", seed=0, trials=1000):
        self.target = target
        self.opcode_bits = opcode_bits
        self.liveness = liveness
        self.include_m_ext = include_m_ext
        self.start_mode = start_mode
        self.seed = seed
        self.trials = trials

    def _settings(self):
        return pipeline.RunSettings(
            target=self.target,
            opcode_bits=self.opcode_bits,
            liveness=self.liveness,
            include_m_ext=self.include_m_ext,
            start_mode=self.start_mode,
            seed=self.seed,
            trials=self.trials,
        )

    def fit(self, X, y=None, trace=None):
        settings = self._settings()
        program = check_program(X)
        result = pipeline.generate(program, check_trace(trace, program), settings)
        self.result_ = result
        self.candidates_ = result.candidates
        self.selected_ = result.selected
        self.layouts_ = [layout for _, layout in result.assigned]
        self.recount_ = result.recount
        return self

    @property
    def patterns_(self):
        return [p for p, _ in self.selected_]

    def transform(self, X):
        """Rewrite ``X`` with the selected patterns (a RewrittenProgram)."""
        check_is_fitted(self, "selected_")
        return oracle.rewrite(check_program(X), self.patterns_, self.liveness)

    def score(self, X, y=None, trace=None):
        """Percent saving of the target metric on ``X``, measured by the oracle."""
        check_is_fitted(self, "selected_")
        settings = self._settings()
        program = check_program(X)
        trace = check_trace(trace, program)
        pipeline.check_settings(settings, trace)
        rc = oracle.recount(program, oracle.rewrite(program, self.patterns_, self.liveness), trace)
        return {
            "static-size": rc.static_pct,
            "dynamic-size": rc.dynamic_size_pct,
            "dynamic-count": rc.dynamic_count_pct,
        }[settings.target]

    def to_coredsl(self, set_name="ARISE"):
        check_is_fitted(self, "selected_")
        return emitter.emit_coredsl(self.result_.assigned, set_name)

    def report(self, inputs=None):
        check_is_fitted(self, "selected_")
        return pipeline.build_report(self.result_, self._settings(), inputs)
