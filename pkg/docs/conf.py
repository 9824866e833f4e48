# -*- coding: utf-8 -*-
#
# Sphinx configuration for the hinet documentation.
import os
import re
import sys

sys.path.append(os.pardir)


def _read_version():
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, 'hinet', '__init__.py')
    with open(path) as fp:
        match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", fp.read(), re.M)
    return match.group(1)


extensions = [
    'sphinx.ext.autodoc',
]

source_suffix = '.rst'
master_doc = 'index'

project = u'hinet'
copyright = u'2026, hinet developers'

# The full version, including alpha/beta/rc tags.
release = _read_version()
# The short X.Y version.
version = '.'.join(release.split('.')[:2])

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
htmlhelp_basename = 'hinetdoc'

man_pages = [
    ('index', 'hinet', u'hinet Documentation',
     [u'hinet developers'], 1)
]
