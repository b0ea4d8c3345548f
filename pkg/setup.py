from setuptools import setup, find_packages

setup(
    name='ipdehjb',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    scripts=[],
    license='MIT',
    description='A semi-Lagrangian solver for Hamilton-Jacobi-Bellman integro-PDEs driven by Levy jumps.',
    long_description=open('README.md').read(),
    install_requires=[
        'numpy', 'pandas', 'scipy'
        ],
    entry_points={
        'console_scripts': ['ipde-hjb=ipdehjb.cli:main'],
        },
)
