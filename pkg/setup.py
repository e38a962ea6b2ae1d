from os import path, pardir
from setuptools import setup, find_packages

VERSION = '0.1.0'

PKG_FOLDER = path.abspath(path.join(__file__, pardir))

with open(path.join(PKG_FOLDER, 'requirements.txt')) as req_file:
    requirements = req_file.read().splitlines()

# set a long description which is basically the README
with open(path.join(PKG_FOLDER, 'README.md')) as f:
    long_description = f.read()

setup(
    name='bitsmm-sim',
    version=VERSION,
    packages=find_packages(exclude=['tests']),
    license='Modified Apache License 2.0',
    description='Cycle-accurate simulator and throughput model of a bit-serial '
                'matrix-multiplication systolic array',
    install_requires=requirements,
    extras_require={
        'tests': ['pytest',
                  'pytest-cases',
                  'pytest-cov',
                  'pytest-mock',
                  'pytest-pycodestyle']
    },
    entry_points={
        'console_scripts': ['bitsmm=bitsmm_sim.cli:main'],
    },
    long_description=long_description,
    long_description_content_type='text/markdown',
    classifiers=['License :: OSI Approved :: Apache Software License',
                 'Development Status :: 4 - Beta',
                 'Programming Language :: Python :: 3',
                 'Programming Language :: Python :: 3.8']
)
