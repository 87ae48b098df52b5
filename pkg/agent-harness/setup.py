import setuptools

# 读取README内容作为long_description
try:
    with open("../README.md", "r", encoding="utf-8") as fh:
        long_description = fh.read()
except FileNotFoundError:
    long_description = "MSPDE CLI - 单调漂移 SPDE 收敛性研究命令行工具"

# 读取requirements
install_requires = [
    "click>=8.0.0",
    "numpy>=1.22.0",
    "scipy>=1.12.0",
    "mspde>=0.1.0"
]

setuptools.setup(
    name="cli-anything-mspde",
    version="0.1.0",
    author="Xiaoqiang",
    author_email="xiaoqiangclub@hotmail.com",
    description="MSPDE CLI - 单调漂移 SPDE 收敛性研究命令行工具",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/xiaoqiangclub/mspde",
    packages=setuptools.find_namespace_packages(include=["cli_anything.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires='>=3.9',
    install_requires=install_requires,
    entry_points={
        'console_scripts': [
            'cli-anything-mspde=cli_anything.mspde.core.mspde_cli:cli',
        ],
    },
)
