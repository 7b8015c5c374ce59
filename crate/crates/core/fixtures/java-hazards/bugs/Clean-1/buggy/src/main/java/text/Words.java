package text;

public class Words {
    public static int countWords(String text) {
        int count = 0;
        boolean inWord = false;
        for (int i = 0; i < text.length(); i++) {
            char c = text.charAt(i);
            if (Character.isWhitespace(c)) {
                if (inWord) {
                    count++;
                }
                inWord = false;
            } else {
                inWord = true;
            }
        }
        return count;
    }

    public static boolean isEmpty(String text) {
        return countWords(text) == 0;
    }
}
