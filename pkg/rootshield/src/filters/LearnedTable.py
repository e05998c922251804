import dataclasses

from ..exceptions import ExpiredState


class LearnedTable:
    """
    Mixin for the learned tables. A table is usable for `use_period` seconds after `built_at`;
    verdicts past that point raise ExpiredState so the refresh schedule cannot silently lapse.
    """

    built_at: float
    learn_span: float
    use_period: float
    kind = 'table'

    def expired(self, now: float) -> bool:
        return now - self.built_at > self.use_period

    def check_fresh(self, now: float):
        if self.expired(now):
            raise ExpiredState(
                f'{self.kind} built at {self.built_at} expired at {self.built_at + self.use_period} (now {now})'
            )

    def with_built_at(self, built_at: float):
        """the same learned content, re-issued at `built_at`"""
        return dataclasses.replace(self, built_at=built_at)
