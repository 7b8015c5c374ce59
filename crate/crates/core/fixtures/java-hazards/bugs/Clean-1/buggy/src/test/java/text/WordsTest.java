package text;

public class WordsTest {
    public void testTrailing() {
        assert Words.countWords("a b") == 2;
    }
}
