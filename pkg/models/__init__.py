from models.base import Classifier, ModelBundle
from models.dataset import Dataset
from models.embedding import EmbeddingTable
from models.features import SparseVector, TfidfModel
from models.linear_svm import LinearSvmModel
from models.naive_bayes import NaiveBayesModel
from models.vocabulary import Vocabulary


__all__ = [
    "Classifier",
    "Dataset",
    "EmbeddingTable",
    "LinearSvmModel",
    "ModelBundle",
    "NaiveBayesModel",
    "SparseVector",
    "TfidfModel",
    "Vocabulary",
]
