"""Executable checks of the weighted inequalities and structural lemmas."""

from .experiments import *  # noqa: F401,F403
from .experiments import __all__ as _exp_all
from .functions import *  # noqa: F401,F403
from .functions import __all__ as _fn_all
from .lemmas import *  # noqa: F401,F403
from .lemmas import __all__ as _lem_all
from .levelset import *  # noqa: F401,F403
from .levelset import __all__ as _ls_all
from .reports import *  # noqa: F401,F403
from .reports import __all__ as _rep_all
from .setup import *  # noqa: F401,F403
from .setup import __all__ as _setup_all

__all__ = [*_exp_all, *_fn_all, *_lem_all, *_ls_all, *_rep_all, *_setup_all]
