"""All twelve acceptance criteria at their stated tolerances; one line per criterion."""
import pytest

from postfa import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(acceptance.CHECKS))
def test_criterion(number):
    result = acceptance.CHECKS[number]()
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    for d in result.details:
        print("    " + d)
    assert result.passed, "\n".join([line, *result.details])
