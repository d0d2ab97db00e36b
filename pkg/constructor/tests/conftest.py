from tensorcore.tests.conftest import *  # noqa
