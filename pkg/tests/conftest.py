import random

import pytest

from SCKit.config import SCKitConfig
from SCKit.group_math import GroupParams, generate_params
from SCKit.primitives import get_profile


@pytest.fixture
def toy_group():
    """示例中的小群 (p=23, q=11, g=2)"""
    return GroupParams(p=23, q=11, g=2)


@pytest.fixture(scope="module")
def group64():
    return generate_params(64, 32, random.Random("sckit-test-64"))


@pytest.fixture(scope="session")
def group1024():
    return generate_params(1024, 160, random.Random("sckit-test-1024"))


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture
def modern():
    return get_profile("modern-default")


@pytest.fixture
def paper_compat():
    return get_profile("paper-compat")


@pytest.fixture
def hooks_config():
    return SCKitConfig(overrides={"test_hooks": True}, persist=False)


@pytest.fixture
def plain_config():
    return SCKitConfig(persist=False)
