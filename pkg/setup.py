from setuptools import setup, find_packages

setup(
    name='bayesian_hpo',
    version='0.1.dev3',
    description='Bayesian hyperparameter optimization of intrusion-detection networks',
    classifiers=[
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'License :: OSI Approved :: BSD License'
    ],
    packages=find_packages(exclude=['*.tests']),
    python_requires='>=3.8',
    install_requires=[
        'numpy >= 1.17',
        'orca >= 1.4',
        'pandas >= 1.5',
        'scikit-learn >= 1.0',
        'scipy >= 1.7'
    ],
    entry_points={
        'console_scripts': ['study = bayesian_hpo.cli:main']
    }
)
