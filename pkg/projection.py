import logging
from dataclasses import dataclass
from typing import List, Optional

from pydantic import BaseModel, Field

from spi_model import first_canonical_l
from syntax import Instruction, LSeq, Omega, PgaTerm, Prim, format_program, sequence_term


logger = logging.getLogger(__name__)

# Padding is materialized, so absurd repeat counters are refused.
MAX_PADDING = 1 << 16


class PaddingLimitExceeded(ValueError):
    """The projection is defined but would not fit within MAX_PADDING instructions."""

    def __init__(self, counter: int, padding: int):
        self.counter = counter
        self.padding = padding
        super().__init__(
            f"resource limit: projecting \\##{counter} needs {padding} #0 instructions of padding, "
            f"more than the {MAX_PADDING} this tool materializes"
        )


@dataclass(frozen=True)
class KernelDiagnosis:
    in_kernel: bool
    first_canonical: LSeq
    counter: Optional[int] = None
    preceding: int = 0

    @property
    def deficit(self) -> int:
        if self.counter is None:
            return 0
        return max(0, self.counter - self.preceding)

    def describe(self) -> str:
        if self.counter is None:
            return "member: no repeat instruction"
        if self.in_kernel:
            return f"member: \\##{self.counter} preceded by {self.preceding} instruction(s)"
        return (
            f"not a member: \\##{self.counter} preceded by {self.preceding} instruction(s)"
            f" (deficit {self.deficit})"
        )


def kernel_check(seq: LSeq) -> KernelDiagnosis:
    form = first_canonical_l(seq)
    last = form.items[-1]
    if not last.is_repeat:
        return KernelDiagnosis(True, form)
    preceding = len(form) - 1
    return KernelDiagnosis(last.counter <= preceding, form, last.counter, preceding)


class ProjectionDocument(BaseModel):
    input: str = Field(description="The L-sequence as given")
    first_canonical_l: str = Field(description="Input truncated after its leftmost repeat instruction")
    in_kernel: bool = Field(description="Whether the repeater is preceded by at least its counter's worth of instructions")
    padding_added: int = Field(description="Number of #0 instructions inserted before the repeater")
    result: str = Field(description="The projected PGA program")


@dataclass(frozen=True)
class ProjectionReport:
    input: LSeq
    first_canonical_l: LSeq
    in_kernel: bool
    padding_added: int
    result: PgaTerm

    def to_document(self) -> ProjectionDocument:
        return ProjectionDocument(
            input=format_program(self.input),
            first_canonical_l=format_program(self.first_canonical_l),
            in_kernel=self.in_kernel,
            padding_added=self.padding_added,
            result=format_program(self.result),
        )

    def to_text(self) -> str:
        return "\n".join(
            [
                f"input: {format_program(self.input)}",
                f"first canonical L-form: {format_program(self.first_canonical_l)}",
                f"in kernel: {'yes' if self.in_kernel else 'no'}",
                f"padding added: {self.padding_added}",
                f"result: {format_program(self.result)}",
            ]
        )


def _prims(instructions) -> List[PgaTerm]:
    return [Prim(instruction) for instruction in instructions]


def pgla2pga(seq: LSeq) -> ProjectionReport:
    diagnosis = kernel_check(seq)
    form = diagnosis.first_canonical
    if diagnosis.counter is None:
        return ProjectionReport(seq, form, True, 0, sequence_term(_prims(form.items)))

    padding = diagnosis.deficit
    if padding > MAX_PADDING:
        raise PaddingLimitExceeded(diagnosis.counter, padding)
    if padding:
        logger.warning(f"{form} is outside the kernel; padding the repeated block with {padding} #0 instruction(s)")
    body = form.items[:-1] + (Instruction.jump(0),) * padding
    split = len(body) - diagnosis.counter
    repeated = Omega(sequence_term(_prims(body[split:])))
    result = sequence_term(_prims(body[:split]) + [repeated])
    logger.debug(f"Projected {format_program(seq)} to {format_program(result)}")
    return ProjectionReport(seq, form, diagnosis.in_kernel, padding, result)
